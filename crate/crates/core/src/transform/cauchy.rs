use crate::cantor::{AtomicMeasure, Interval};
use crate::error::{Error, Result};
use crate::sum::NeumaierSum;

/// Atoms closer than this to the evaluation point count as collisions.
pub const COLLISION_SEPARATION: f64 = 1e-300;

/// `Hν(x) = Σ m_i / (y_i - x)`, summed in ascending position order.
pub fn cauchy_sum(mu: &AtomicMeasure, x: f64) -> Result<f64> {
    let mut acc = NeumaierSum::new();
    for atom in mu.atoms() {
        let d = atom.position - x;
        if d.abs() <= COLLISION_SEPARATION {
            return Err(Error::Singularity {
                x,
                position: atom.position,
            });
        }
        acc += atom.mass / d;
    }
    Ok(acc.value())
}

/// `H(1_I μ)(x)`.
pub fn h_indicator(mu: &AtomicMeasure, interval: &Interval, x: f64) -> Result<f64> {
    cauchy_sum(&mu.restrict(interval), x)
}
