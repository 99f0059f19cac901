//! Cantor-measure weight pairs for the Hilbert transform.
//!
//! The crate builds the uniform Cantor measure ω (through its dyadic
//! quadrature), the gap-supported measure σ with geometric weights, the Cauchy
//! transform of both, and the quantities compared in two-weight norm
//! inequalities: two-tailed Muckenhoupt products, local testing integrals and a
//! square-function (ℓ²-valued) Muckenhoupt functional evaluated on an explicit
//! family of test functions.

pub mod cantor;
pub mod config;
pub mod criteria;
pub mod error;
pub mod sum;
pub mod transform;

#[cfg(feature = "cli")]
pub mod report;

pub use config::{ExponentConfig, Roles};
pub use error::{Error, Result};

/// Order-preserving fallible map that fan out over rayon when the `parallel` feature is on.
pub(crate) mod par {
    #[cfg(feature = "parallel")]
    use rayon::prelude::*;

    pub fn try_map<T, R, E, F>(items: &[T], f: F) -> Result<Vec<R>, E>
    where
        T: Sync,
        R: Send,
        E: Send,
        F: Fn(&T) -> Result<R, E> + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        {
            items.par_iter().map(f).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            items.iter().map(f).collect()
        }
    }
}
