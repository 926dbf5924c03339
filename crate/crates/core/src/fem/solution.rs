use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::mesh::{Point, TriangularMesh};
use super::quadrature::TriangleQuadrature;

/// Norm used to measure differences of spatial functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    /// L²(D)
    L2,
    /// H¹₀(D) seminorm ‖∇v‖_{L²(D)}
    H10,
}

impl std::fmt::Display for Norm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Norm::L2 => "l2",
            Norm::H10 => "h10",
        })
    }
}

/// Piecewise-linear function on a mesh, stored by nodal values.
///
/// Solver output has zero boundary entries; functions built with
/// [`FemSolution::interpolate`] keep whatever boundary values they are given.
#[derive(Debug, Clone, PartialEq)]
pub struct FemSolution<'m> {
    mesh: &'m TriangularMesh,
    values: Vec<f64>,
}

impl<'m> FemSolution<'m> {
    pub fn zero(mesh: &'m TriangularMesh) -> Self {
        Self {
            mesh,
            values: vec![0.0; mesh.vertices().len()],
        }
    }

    pub fn from_interior(mesh: &'m TriangularMesh, interior: &[f64]) -> Self {
        let mut values = vec![0.0; mesh.vertices().len()];
        for (&v, &x) in mesh.interior_vertices().iter().zip(interior) {
            values[v] = x;
        }
        Self { mesh, values }
    }

    pub fn from_nodal(mesh: &'m TriangularMesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.vertices().len() {
            return Err(Error::invalid(format!(
                "{} nodal values for a mesh with {} vertices",
                values.len(),
                mesh.vertices().len()
            )));
        }
        Ok(Self { mesh, values })
    }

    /// Nodal interpolant of `f`, boundary values included.
    pub fn interpolate(mesh: &'m TriangularMesh, f: impl Fn(Point) -> f64) -> Self {
        Self {
            mesh,
            values: mesh.vertices().iter().map(|&p| f(p)).collect(),
        }
    }

    pub fn mesh(&self) -> &'m TriangularMesh {
        self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn interior_values(&self) -> Vec<f64> {
        self.mesh
            .interior_vertices()
            .iter()
            .map(|&v| self.values[v])
            .collect()
    }

    fn same_mesh(&self, other: &FemSolution<'_>) -> Result<()> {
        if std::ptr::eq(self.mesh, other.mesh) || self.mesh == other.mesh {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "functions live on different meshes (m = {} and m = {})",
                self.mesh.m(),
                other.mesh.m()
            )))
        }
    }

    pub fn l2_norm(&self) -> f64 {
        l2_norm_sq(self.mesh, &self.values).sqrt()
    }

    pub fn h10_seminorm(&self) -> f64 {
        h10_seminorm_sq(self.mesh, &self.values).sqrt()
    }

    pub fn norm(&self, which: Norm) -> f64 {
        match which {
            Norm::L2 => self.l2_norm(),
            Norm::H10 => self.h10_seminorm(),
        }
    }

    pub fn diff_norm(&self, other: &FemSolution<'_>, which: Norm) -> Result<f64> {
        Ok(self.diff_norm_sq(other, which)?.sqrt())
    }

    pub fn diff_norm_sq(&self, other: &FemSolution<'_>, which: Norm) -> Result<f64> {
        self.same_mesh(other)?;
        let diff: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(match which {
            Norm::L2 => l2_norm_sq(self.mesh, &diff),
            Norm::H10 => h10_seminorm_sq(self.mesh, &diff),
        })
    }

    /// The nonlinear quantity of interest ‖u‖²_{H¹₀} = ∫ |∇u|².
    pub fn qoi_nl(&self) -> f64 {
        h10_seminorm_sq(self.mesh, &self.values)
    }

    /// ‖u − exact‖_{L²(D)} with a degree-5 rule per element.
    pub fn l2_error_against(&self, exact: impl Fn(Point) -> f64) -> f64 {
        let rule = TriangleQuadrature::with_order(5).expect("order 5 rule exists");
        let mut total = 0.0;
        for (t, tri) in self.mesh.triangles().iter().enumerate() {
            let pts = self.mesh.triangle_points(t);
            let area = self.mesh.signed_area(t);
            for (q, l) in rule.barycentric().iter().enumerate() {
                let uh = l[0] * self.values[tri[0]]
                    + l[1] * self.values[tri[1]]
                    + l[2] * self.values[tri[2]];
                let e = uh - exact(rule.map_point(q, &pts));
                total += area * rule.weights()[q] * e * e;
            }
        }
        total.sqrt()
    }
}

// ∫_T u² = |T|/6 (u₀² + u₁² + u₂² + u₀u₁ + u₀u₂ + u₁u₂) for linear u.
fn l2_norm_sq(mesh: &TriangularMesh, values: &[f64]) -> f64 {
    mesh.triangles()
        .iter()
        .enumerate()
        .map(|(t, tri)| {
            let [a, b, c] = tri.map(|v| values[v]);
            mesh.signed_area(t) / 6.0 * (a * a + b * b + c * c + a * b + a * c + b * c)
        })
        .sum()
}

fn h10_seminorm_sq(mesh: &TriangularMesh, values: &[f64]) -> f64 {
    mesh.triangles()
        .iter()
        .enumerate()
        .map(|(t, tri)| {
            let g = mesh.basis_gradients(t);
            let mut grad = [0.0; 2];
            for a in 0..3 {
                grad[0] += values[tri[a]] * g[a][0];
                grad[1] += values[tri[a]] * g[a][1];
            }
            mesh.signed_area(t) * (grad[0] * grad[0] + grad[1] * grad[1])
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble_system, solve};
    use std::f64::consts::PI;

    #[test]
    fn zero_function_norms() {
        let mesh = TriangularMesh::unit_square(5).unwrap();
        let u = FemSolution::zero(&mesh);
        assert_eq!(u.l2_norm(), 0.0);
        assert_eq!(u.h10_seminorm(), 0.0);
        assert_eq!(u.qoi_nl(), 0.0);
    }

    #[test]
    fn linear_function_has_unit_gradient() {
        let mesh = TriangularMesh::unit_square(7).unwrap();
        let u = FemSolution::interpolate(&mesh, |p| p[0]);
        assert!((u.h10_seminorm() - 1.0).abs() < 1e-13);
        // ∫ x² = 1/3, exact for the interpolant since it reproduces x
        assert!((u.l2_norm() - (1.0f64 / 3.0).sqrt()).abs() < 1e-13);
    }

    #[test]
    fn self_difference_vanishes() {
        let mesh = TriangularMesh::unit_square(6).unwrap();
        let u = FemSolution::interpolate(&mesh, |p| (p[0] * 5.0).sin() + p[1]);
        assert_eq!(u.diff_norm(&u, Norm::L2).unwrap(), 0.0);
        assert_eq!(u.diff_norm(&u, Norm::H10).unwrap(), 0.0);
    }

    #[test]
    fn mesh_mismatch_rejected() {
        let a = TriangularMesh::unit_square(4).unwrap();
        let b = TriangularMesh::unit_square(5).unwrap();
        let u = FemSolution::zero(&a);
        let v = FemSolution::zero(&b);
        assert!(u.diff_norm(&v, Norm::L2).is_err());
    }

    #[test]
    fn qoi_of_manufactured_interpolant() {
        // ∫ |∇ sin(πx) sin(πy)|² = π²/2
        let mesh = TriangularMesh::unit_square(32).unwrap();
        let u = FemSolution::interpolate(&mesh, |p| (PI * p[0]).sin() * (PI * p[1]).sin());
        let rel = (u.qoi_nl() - PI * PI / 2.0).abs() / (PI * PI / 2.0);
        assert!(rel < 0.02, "relative gap {rel}");
    }

    #[test]
    fn manufactured_solution_nodal_accuracy() {
        let mesh = TriangularMesh::unit_square(32).unwrap();
        let exact = |p: Point| (PI * p[0]).sin() * (PI * p[1]).sin();
        let sys = assemble_system(&mesh, |_| 1.0, |p| 2.0 * PI * PI * exact(p), 2).unwrap();
        let u = solve(&sys).unwrap();
        for (v, &p) in mesh.vertices().iter().enumerate() {
            assert!((u.values()[v] - exact(p)).abs() < 5e-3);
        }
        for (v, &b) in mesh.boundary_mask().iter().enumerate() {
            if b {
                assert_eq!(u.values()[v], 0.0);
            }
        }
    }

    #[test]
    fn galerkin_residual_vanishes() {
        let mesh = TriangularMesh::unit_square(16).unwrap();
        let sys = assemble_system(&mesh, |p| 1.5 + 0.3 * (4.0 * p[0]).sin(), |p| p[0], 2).unwrap();
        let u = solve(&sys).unwrap();
        let au = sys.matrix.mul_vec(&u.interior_values());
        let b: f64 = sys.rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (ai, bi) in au.iter().zip(&sys.rhs) {
            assert!((ai - bi).abs() <= 1e-9 * b);
        }
    }

    #[test]
    fn scaling_coefficient_and_source_together_is_invisible() {
        let mesh = TriangularMesh::unit_square(12).unwrap();
        let a = |p: Point| 1.2 + p[0] * p[1];
        let base = solve(&assemble_system(&mesh, a, |p| p[0], 2).unwrap()).unwrap();
        let c = 4.5;
        let scaled =
            solve(&assemble_system(&mesh, |p| c * a(p), |p| c * p[0], 2).unwrap()).unwrap();
        let gap = base.diff_norm(&scaled, Norm::L2).unwrap();
        assert!(gap <= 1e-9 * base.l2_norm());
        // scaling only the coefficient scales the solution by 1/c
        let coeff_only =
            solve(&assemble_system(&mesh, |p| c * a(p), |p| p[0], 2).unwrap()).unwrap();
        let rescaled =
            FemSolution::from_nodal(&mesh, coeff_only.values().iter().map(|v| c * v).collect())
                .unwrap();
        assert!(base.diff_norm(&rescaled, Norm::L2).unwrap() <= 1e-9 * base.l2_norm());
    }

    #[test]
    fn manufactured_solution_converges_at_second_order() {
        let exact = |p: Point| (PI * p[0]).sin() * (PI * p[1]).sin();
        let errors: Vec<f64> = [8, 16, 32]
            .iter()
            .map(|&m| {
                let mesh = TriangularMesh::unit_square(m).unwrap();
                let sys = assemble_system(&mesh, |_| 1.0, |p| 2.0 * PI * PI * exact(p), 2).unwrap();
                solve(&sys).unwrap().l2_error_against(exact)
            })
            .collect();
        for w in errors.windows(2) {
            assert!(w[1] < w[0]);
            let ratio = w[0] / w[1];
            assert!((ratio - 4.0).abs() <= 0.8, "ratio {ratio}");
            let order = ratio.log2();
            assert!((1.8..=2.2).contains(&order), "order {order}");
        }
    }
}
