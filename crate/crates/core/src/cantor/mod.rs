//! Triadic tree geometry and the measures built on it.

mod geometry;
mod measure;

pub use geometry::{gap, interval, pow3, sibling, Boundary, Interval, TriadicIndex, MAX_GENERATION};
pub use measure::{
    cantor_quadrature, omega_mass, precursor_ratio, sigma_interval_mass_closed, sigma_tail_mass,
    sigma_total_mass_closed, sigma_truncated, sigma_weight, Atom, AtomicMeasure, Provenance, SigmaWeight, Variant,
    MAX_OMEGA_DEPTH, MAX_SIGMA_GENERATION,
};
