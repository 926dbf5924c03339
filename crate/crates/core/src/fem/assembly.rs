use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use crate::error::{Error, Result};

use super::mesh::{Point, TriangularMesh};
use super::quadrature::TriangleQuadrature;

const NO_ENTRY: usize = usize::MAX;

/// Square sparse matrix in compressed-row layout.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    row_ptr: Arc<[usize]>,
    col_idx: Arc<[usize]>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn dim(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let cols = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
        match cols.binary_search(&j) {
            Ok(k) => self.values[self.row_ptr[i] + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec_into(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
            *o = self.col_idx[lo..hi]
                .iter()
                .zip(&self.values[lo..hi])
                .map(|(&j, &v)| v * x[j])
                .sum();
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.mul_vec_into(x, &mut out);
        out
    }

    /// Largest entrywise |A - Aᵀ|.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim() {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                worst = worst.max((self.values[k] - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            row_ptr: Arc::clone(&self.row_ptr),
            col_idx: Arc::clone(&self.col_idx),
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }
}

/// Stiffness matrix and load vector restricted to the interior vertices.
#[derive(Debug, Clone)]
pub struct LinearSystem<'m> {
    pub mesh: &'m TriangularMesh,
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
}

/// Element stiffness `ā |T| ∇φ_a · ∇φ_b` for a P1 triangle with mean
/// coefficient `mean_coeff`.
pub fn local_stiffness(tri: &[Point; 3], mean_coeff: f64) -> [[f64; 3]; 3] {
    let twice_area = (tri[1][0] - tri[0][0]) * (tri[2][1] - tri[0][1])
        - (tri[2][0] - tri[0][0]) * (tri[1][1] - tri[0][1]);
    let grads = [
        [tri[1][1] - tri[2][1], tri[2][0] - tri[1][0]],
        [tri[2][1] - tri[0][1], tri[0][0] - tri[2][0]],
        [tri[0][1] - tri[1][1], tri[1][0] - tri[0][0]],
    ];
    // grads are scaled by 2|T|; |T| ∇φ_a·∇φ_b = g_a·g_b / (4|T|) = g_a·g_b / (2 · twice_area)
    let scale = mean_coeff / (2.0 * twice_area);
    let mut k = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            k[a][b] = scale * (grads[a][0] * grads[b][0] + grads[a][1] * grads[b][1]);
        }
    }
    k
}

/// Precomputed assembly data for repeated solves on one mesh with varying
/// coefficients: deduplicated quadrature points, the sparsity pattern, and
/// the element-to-CSR scatter map.
#[derive(Debug, Clone)]
pub struct Assembler<'m> {
    mesh: &'m TriangularMesh,
    rule: TriangleQuadrature,
    points: Vec<Point>,
    element_points: Vec<usize>,
    // |T| ∇φ_a·∇φ_b for a <= b, packed as (0,0),(0,1),(0,2),(1,1),(1,2),(2,2)
    geometric: Vec<[f64; 6]>,
    row_ptr: Arc<[usize]>,
    col_idx: Arc<[usize]>,
    scatter: Vec<[usize; 9]>,
}

const PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

impl<'m> Assembler<'m> {
    pub fn new(mesh: &'m TriangularMesh, quad_order: usize) -> Result<Self> {
        let rule = TriangleQuadrature::with_order(quad_order)?;
        let nq = rule.len();
        let n_tri = mesh.triangles().len();

        let mut points = Vec::new();
        let mut seen: HashMap<(u64, u64), usize> = HashMap::new();
        let mut element_points = Vec::with_capacity(n_tri * nq);
        let mut geometric = Vec::with_capacity(n_tri);
        for t in 0..n_tri {
            let tri = mesh.triangle_points(t);
            for q in 0..nq {
                let p = rule.map_point(q, &tri);
                let key = (p[0].to_bits(), p[1].to_bits());
                let idx = *seen.entry(key).or_insert_with(|| {
                    points.push(p);
                    points.len() - 1
                });
                element_points.push(idx);
            }
            let k = local_stiffness(&tri, 1.0);
            geometric.push(PAIRS.map(|(a, b)| k[a][b]));
        }

        let n = mesh.num_interior();
        let mut rows: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for tri in mesh.triangles() {
            for &va in tri {
                for &vb in tri {
                    if let (Some(i), Some(j)) = (mesh.dof_of_vertex(va), mesh.dof_of_vertex(vb)) {
                        rows[i].insert(j);
                    }
                }
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for row in &rows {
            col_idx.extend(row.iter().copied());
            row_ptr.push(col_idx.len());
        }

        let position = |i: usize, j: usize| -> usize {
            let cols = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            row_ptr[i]
                + cols
                    .binary_search(&j)
                    .expect("pattern covers element couplings")
        };
        let scatter = mesh
            .triangles()
            .iter()
            .map(|tri| {
                let mut s = [NO_ENTRY; 9];
                for a in 0..3 {
                    for b in 0..3 {
                        if let (Some(i), Some(j)) =
                            (mesh.dof_of_vertex(tri[a]), mesh.dof_of_vertex(tri[b]))
                        {
                            s[3 * a + b] = position(i, j);
                        }
                    }
                }
                s
            })
            .collect();

        Ok(Self {
            mesh,
            rule,
            points,
            element_points,
            geometric,
            row_ptr: row_ptr.into(),
            col_idx: col_idx.into(),
            scatter,
        })
    }

    pub fn mesh(&self) -> &'m TriangularMesh {
        self.mesh
    }

    pub fn rule(&self) -> &TriangleQuadrature {
        &self.rule
    }

    /// Distinct quadrature points over the whole mesh. Coefficient samples
    /// passed to [`Assembler::stiffness`] are indexed like this slice.
    pub fn quadrature_points(&self) -> &[Point] {
        &self.points
    }

    pub fn sample(&self, f: impl Fn(Point) -> f64) -> Vec<f64> {
        self.points.iter().map(|&p| f(p)).collect()
    }

    pub fn stiffness(&self, coeff_at_points: &[f64]) -> Result<CsrMatrix> {
        if coeff_at_points.len() != self.points.len() {
            return Err(Error::invalid(format!(
                "expected {} coefficient samples, got {}",
                self.points.len(),
                coeff_at_points.len()
            )));
        }
        if let Some((q, &a)) = coeff_at_points
            .iter()
            .enumerate()
            .find(|(_, a)| !(**a > 0.0) || !a.is_finite())
        {
            let p = self.points[q];
            return Err(Error::Coercivity(format!(
                "coefficient {a} at quadrature point ({}, {}) is not strictly positive",
                p[0], p[1]
            )));
        }

        let nq = self.rule.len();
        let weights = self.rule.weights();
        let mut values = vec![0.0; self.col_idx.len()];
        for (t, scatter) in self.scatter.iter().enumerate() {
            let idx = &self.element_points[t * nq..(t + 1) * nq];
            let mean: f64 = idx
                .iter()
                .zip(weights)
                .map(|(&q, &w)| w * coeff_at_points[q])
                .sum();
            for (&(a, b), &g) in PAIRS.iter().zip(&self.geometric[t]) {
                let v = mean * g;
                let ab = scatter[3 * a + b];
                if ab != NO_ENTRY {
                    values[ab] += v;
                    if a != b {
                        values[scatter[3 * b + a]] += v;
                    }
                }
            }
        }
        Ok(CsrMatrix {
            row_ptr: Arc::clone(&self.row_ptr),
            col_idx: Arc::clone(&self.col_idx),
            values,
        })
    }

    /// Load vector `∫ f φ_i` over interior basis functions.
    pub fn load(&self, source: impl Fn(Point) -> f64) -> Vec<f64> {
        let mesh = self.mesh;
        let mut rhs = vec![0.0; mesh.num_interior()];
        let weights = self.rule.weights();
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let area = mesh.signed_area(t);
            let pts = mesh.triangle_points(t);
            for (q, lambda) in self.rule.barycentric().iter().enumerate() {
                let fq = weights[q] * area * source(self.rule.map_point(q, &pts));
                for a in 0..3 {
                    if let Some(i) = mesh.dof_of_vertex(tri[a]) {
                        rhs[i] += fq * lambda[a];
                    }
                }
            }
        }
        rhs
    }

    pub fn system(&self, coeff_at_points: &[f64], rhs: Vec<f64>) -> Result<LinearSystem<'m>> {
        Ok(LinearSystem {
            mesh: self.mesh,
            matrix: self.stiffness(coeff_at_points)?,
            rhs,
        })
    }
}

/// Assemble the Dirichlet problem `-∇·(a∇u) = f` with the given quadrature
/// order for both the coefficient and the load.
pub fn assemble_system<'m>(
    mesh: &'m TriangularMesh,
    coeff: impl Fn(Point) -> f64,
    source: impl Fn(Point) -> f64,
    quad_order: usize,
) -> Result<LinearSystem<'m>> {
    let assembler = Assembler::new(mesh, quad_order)?;
    let samples = assembler.sample(coeff);
    let rhs = assembler.load(source);
    assembler.system(&samples, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_triangle_stiffness() {
        let k = local_stiffness(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], 1.0);
        let want = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for a in 0..3 {
            for b in 0..3 {
                assert!((k[a][b] - want[a][b]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn constant_coefficient_is_five_point_laplacian() {
        // with this diagonal the P1 stiffness for a ≡ 1 is the 5-point stencil
        let mesh = TriangularMesh::unit_square(4).unwrap();
        let sys = assemble_system(&mesh, |_| 1.0, |_| 0.0, 2).unwrap();
        let a = &sys.matrix;
        let interior = mesh.interior_vertices();
        for i in 0..a.dim() {
            assert!((a.get(i, i) - 4.0).abs() < 1e-13);
            let pi = mesh.vertices()[interior[i]];
            for j in (0..a.dim()).filter(|&j| j != i) {
                let pj = mesh.vertices()[interior[j]];
                let dist = (pi[0] - pj[0]).abs() + (pi[1] - pj[1]).abs();
                let want = if (dist - mesh.h()).abs() < 1e-12 {
                    -1.0
                } else {
                    0.0
                };
                assert!((a.get(i, j) - want).abs() < 1e-13, "({i}, {j})");
            }
        }
    }

    #[test]
    fn zero_source_gives_zero_rhs() {
        let mesh = TriangularMesh::unit_square(5).unwrap();
        let sys = assemble_system(&mesh, |_| 2.0, |_| 0.0, 2).unwrap();
        assert!(sys.rhs.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_coefficient_scales_matrix() {
        let mesh = TriangularMesh::unit_square(6).unwrap();
        let one = assemble_system(&mesh, |_| 1.0, |p| p[0], 2).unwrap();
        let c = 3.7;
        let scaled = assemble_system(&mesh, |_| c, |p| p[0], 2).unwrap();
        for (x, y) in one.matrix.values().iter().zip(scaled.matrix.values()) {
            assert!((c * x - y).abs() <= 1e-14 * y.abs().max(1.0));
        }
    }

    #[test]
    fn stored_entries_exactly_symmetric() {
        let mesh = TriangularMesh::unit_square(9).unwrap();
        let sys = assemble_system(
            &mesh,
            |p| 1.5 + 0.4 * (3.0 * p[0]).sin() * (7.0 * p[1]).cos(),
            |p| p[0],
            2,
        )
        .unwrap();
        assert_eq!(sys.matrix.max_asymmetry(), 0.0);
    }

    #[test]
    fn nonpositive_coefficient_rejected() {
        let mesh = TriangularMesh::unit_square(4).unwrap();
        let err = assemble_system(&mesh, |p| p[0] - 0.5, |_| 1.0, 2).unwrap_err();
        assert!(matches!(err, Error::Coercivity(_)));
    }

    #[test]
    fn midpoints_are_shared_between_elements() {
        let mesh = TriangularMesh::unit_square(4).unwrap();
        let asm = Assembler::new(&mesh, 2).unwrap();
        // one point per edge: 3 m^2 + 2 m
        assert_eq!(asm.quadrature_points().len(), 3 * 16 + 8);
    }

    #[test]
    fn linear_source_load_is_exact() {
        // Centre hat on m = 2: volume h² = 1/4, support point-symmetric about
        // (1/2, 1/2), so ∫ x φ = 1/8.
        let mesh = TriangularMesh::unit_square(2).unwrap();
        let sys = assemble_system(&mesh, |_| 1.0, |p| p[0], 2).unwrap();
        let fine = assemble_system(&mesh, |_| 1.0, |p| p[0], 5).unwrap();
        assert!((sys.rhs[0] - fine.rhs[0]).abs() < 1e-15);
        assert!((sys.rhs[0] - 0.125).abs() < 1e-15);
    }
}
