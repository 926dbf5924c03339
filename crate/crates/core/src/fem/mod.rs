//! P1 conforming finite elements for `-∇·(a∇u) = f` on the unit square with
//! homogeneous Dirichlet data.

mod assembly;
mod mesh;
mod quadrature;
mod solution;
mod solver;

pub use assembly::{assemble_system, local_stiffness, Assembler, CsrMatrix, LinearSystem};
pub use mesh::{Point, TriangularMesh};
pub use quadrature::TriangleQuadrature;
pub use solution::{FemSolution, Norm};
pub use solver::{conjugate_gradient, solve, CgOutcome, DEFAULT_RTOL};
