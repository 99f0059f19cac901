//! Cauchy transforms of atomic measures and the zeros of Hω in the gaps.

mod cauchy;
mod field;
mod zeros;

pub use cauchy::{cauchy_sum, h_indicator, COLLISION_SEPARATION};
pub use field::{
    CauchyField, ClusterField, FieldSample, OmegaField, EXPANSION_ORDER, MAX_CLUSTER_DEPTH, MAX_FIELD_DEPTH,
};
pub use zeros::{find_zero, zero_table, zero_table_depth, ZeroEntry, ZeroTable, EDGE_CLEARANCE, MAX_ZERO_GENERATION};

use crate::cantor::TriadicIndex;
use crate::error::Result;

/// A value with an absolute error bound.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CertifiedValue {
    pub value: f64,
    pub error_bound: f64,
}

impl CertifiedValue {
    pub fn new(value: f64, error_bound: f64) -> Self {
        Self { value, error_bound }
    }

    pub fn exact(value: f64) -> Self {
        Self::new(value, 0.0)
    }

    pub fn contains(&self, other: f64) -> bool {
        (self.value - other).abs() <= self.error_bound
    }
}

impl OmegaField {
    /// Hω_N at `x`, bounded against the transform of the Cantor measure itself.
    ///
    /// Fails with a too-close error when `x` lies in one of the depth-N cylinders.
    pub fn hilbert(&self, x: f64) -> Result<CertifiedValue> {
        let h = self.cell_half_length();
        let s = self.evaluate(TriadicIndex::root(), x, h)?;
        Ok(CertifiedValue::new(s.value, h * s.kernel_sq + s.truncation))
    }
}

/// Hω_N(x) with the midpoint-displacement error bound.
pub fn hilbert_omega(x: f64, depth: u32) -> Result<CertifiedValue> {
    OmegaField::new(depth)?.hilbert(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cantor::{cantor_quadrature, gap};
    use crate::error::Error;

    #[test]
    fn center_is_a_zero_at_every_depth() {
        for n in 0..=20 {
            if n == 0 {
                assert!(matches!(hilbert_omega(0.5, 0), Err(Error::TooClose { .. })));
                continue;
            }
            assert!(hilbert_omega(0.5, n).unwrap().value.abs() <= 1e-15);
        }
    }

    #[test]
    fn single_cylinder_far_away() {
        let v = hilbert_omega(2.0, 0).unwrap();
        assert!((v.value + 2.0 / 3.0).abs() < 1e-15);
        assert!((v.error_bound - 0.5).abs() < 1e-12);
    }

    #[test]
    fn agrees_with_brute_force() {
        let q = cantor_quadrature(9).unwrap();
        for x in [0.4, 0.5, 0.71, 1.7, -3.0] {
            let got = hilbert_omega(x, 9).unwrap().value;
            let brute = cauchy_sum(&q, x).unwrap();
            assert!((got - brute).abs() <= 1e-13 * brute.abs().max(1.0));
        }
    }

    #[test]
    fn points_in_cylinders_are_rejected() {
        assert!(matches!(hilbert_omega(0.02, 3), Err(Error::TooClose { .. })));
        assert!(matches!(hilbert_omega(0.3, 9), Err(Error::TooClose { .. })));
        assert!(hilbert_omega(0.05, 3).is_ok());
    }

    #[test]
    fn mirror_antisymmetry() {
        let field = OmegaField::new(12).unwrap();
        for idx in TriadicIndex::generation(3) {
            let g = gap(idx);
            for t in [0.1, 0.37, 0.5, 0.8] {
                let x = g.left() + t * g.length();
                let a = field.hilbert(x).unwrap().value;
                let b = field.hilbert(1.0 - x).unwrap().value;
                assert!((a + b).abs() <= 1e-13 * a.abs().max(1.0), "{a} {b}");
            }
        }
    }

    #[test]
    fn bound_shrinks_under_refinement() {
        let g = gap(TriadicIndex::new(2, 3).unwrap());
        let x = g.left() + 0.3 * g.length();
        let mut last = f64::INFINITY;
        for n in 3..16 {
            let v = hilbert_omega(x, n).unwrap();
            assert!(v.error_bound <= last);
            last = v.error_bound;
        }
    }
}
