use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Uniform triangulation of the unit square.
///
/// Vertex `(i, j)` sits at `(i h, j h)` and has index `i + j (m + 1)`. Every
/// grid cell is split along its lower-left to upper-right diagonal, and both
/// triangles are stored counterclockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangularMesh {
    m: usize,
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary_mask: Vec<bool>,
    // vertex -> interior unknown
    dof_of_vertex: Vec<Option<usize>>,
    interior_vertices: Vec<usize>,
}

impl TriangularMesh {
    pub fn unit_square(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid(
                "mesh needs at least one subdivision per side",
            ));
        }
        let h = 1.0 / m as f64;
        let side = m + 1;
        let mut vertices = Vec::with_capacity(side * side);
        let mut boundary_mask = Vec::with_capacity(side * side);
        for j in 0..side {
            for i in 0..side {
                let x = if i == m { 1.0 } else { i as f64 * h };
                let y = if j == m { 1.0 } else { j as f64 * h };
                vertices.push([x, y]);
                boundary_mask.push(i == 0 || j == 0 || i == m || j == m);
            }
        }

        let mut triangles = Vec::with_capacity(2 * m * m);
        for j in 0..m {
            for i in 0..m {
                let v00 = i + j * side;
                let v10 = v00 + 1;
                let v01 = v00 + side;
                let v11 = v01 + 1;
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            }
        }

        let mut dof_of_vertex = vec![None; vertices.len()];
        let mut interior_vertices = Vec::new();
        for (v, &on_boundary) in boundary_mask.iter().enumerate() {
            if !on_boundary {
                dof_of_vertex[v] = Some(interior_vertices.len());
                interior_vertices.push(v);
            }
        }

        Ok(Self {
            m,
            vertices,
            triangles,
            boundary_mask,
            dof_of_vertex,
            interior_vertices,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn h(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary_mask
    }

    pub fn interior_vertices(&self) -> &[usize] {
        &self.interior_vertices
    }

    pub fn dof_of_vertex(&self, v: usize) -> Option<usize> {
        self.dof_of_vertex[v]
    }

    pub fn num_interior(&self) -> usize {
        self.interior_vertices.len()
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Signed area; positive for counterclockwise triangles.
    pub fn signed_area(&self, t: usize) -> f64 {
        let [p0, p1, p2] = self.triangle_points(t);
        0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]))
    }

    /// Gradients of the three barycentric basis functions on triangle `t`.
    pub fn basis_gradients(&self, t: usize) -> [[f64; 2]; 3] {
        let [p0, p1, p2] = self.triangle_points(t);
        let twice_area = 2.0 * self.signed_area(t);
        [
            [(p1[1] - p2[1]) / twice_area, (p2[0] - p1[0]) / twice_area],
            [(p2[1] - p0[1]) / twice_area, (p0[0] - p2[0]) / twice_area],
            [(p0[1] - p1[1]) / twice_area, (p1[0] - p0[0]) / twice_area],
        ]
    }
}
