//! Dimension truncation laboratory for parametric elliptic PDEs.
//!
//! Estimates `‖g − g_s‖_{L²(U; X)}` for the solution of
//! `-∇·(a(x, y)∇u) = f` on the unit square with a coefficient expanded in
//! countably many uniform parameters, using randomly shifted rank-1 lattice
//! rules, and compares the observed decay in `s` with the predicted rate
//! and closed-form bounds.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod fem;
pub mod field;
pub mod lattice;
pub mod oracle;
pub mod plot;
pub mod theory;

pub use error::{Error, Result};
pub use experiment::{
    ExperimentConfig, OracleCheckReport, OracleCheckSpec, PredictionReport, Quantity,
    QuantitySelection,
};
pub use fem::{FemSolution, Norm, TriangularMesh};
pub use field::{DiffusionFieldSpec, Transform};
pub use lattice::LatticeRule;
pub use oracle::ScalarModelSpec;
pub use theory::{ErrorRow, ErrorTable, RateFit, TableMetadata, TheoryParams};
