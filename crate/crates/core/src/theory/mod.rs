//! Predicted truncation rates, tail and regularity bounds, the closed-form
//! squared-error bound, and empirical rate fits.

mod bounds;
mod fit;
mod table;

pub use bounds::{
    bound_terms, expected_rate, ln_bound_terms, lp_quasi_norm, regularity_bound,
    stechkin_tail_bound, summability_exponent, tail_sum, taylor_order,
    transformed_truncation_upper_bound, truncation_upper_bound, BoundTerms, TheoryParams,
    SUMMABILITY_MARGIN,
};
pub use fit::{fit_rate, RateFit};
pub use table::{ErrorRow, ErrorTable, TableMetadata};
