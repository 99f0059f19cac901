//! The three condition families for the pair (σ, ω), the self-similar energy
//! check and the growth-exponent fit.
//!
//! Every σ used here is truncated at a finite generation and ω is replaced by
//! its depth-N quadrature. Quantities that depend on the truncation report an
//! error bound next to their value; see the individual functions for what the
//! bound covers.

mod growth;
mod muckenhoupt;
mod pair;
mod quadratic;
mod scan;
mod selfsim;
mod testing;

pub use growth::{fit_growth, fit_loglog, geometric_cutoffs, GrowthFit};
pub use muckenhoupt::{ap_constant, ap_family, ap_tail};
pub use pair::{Side, WeightPair};
pub use quadratic::{
    quad_lhs_closed, quad_lhs_direct, quad_rhs_closed, quad_rhs_closed_series, quad_rhs_direct, test_family_coeffs,
    TestFamily,
};
pub use scan::{format_real, ScanResult, ScanRow};
pub use selfsim::selfsim_energy;
pub use testing::{testing_norm, testing_scan, Direction, TestingScan, MAX_TESTING_GENERATION};
