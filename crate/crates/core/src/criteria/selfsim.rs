use crate::cantor::{cantor_quadrature, sigma_truncated, TriadicIndex, Variant};
use crate::config::ExponentConfig;
use crate::error::{Error, Result};
use crate::par;
use crate::sum::NeumaierSum;
use crate::transform::{CauchyField, ClusterField};

/// `∫ |Hσ̇_K|^p dω_N` with the centered σ truncated at generation K.
pub fn selfsim_energy(cfg: &ExponentConfig, sigma_generation: u32, omega_depth: u32) -> Result<f64> {
    let sigma = sigma_truncated(cfg, sigma_generation, Variant::Centered, None)?;
    let field = ClusterField::new(&sigma)?;
    let omega = cantor_quadrature(omega_depth)?;
    let p = cfg.p();
    let terms = par::try_map(omega.atoms(), |a| {
        let s = field.evaluate(TriadicIndex::root(), a.position, 0.0)?;
        Ok::<_, Error>(a.mass * s.value.abs().powf(p))
    })?;
    Ok(terms.into_iter().sum::<NeumaierSum>().value())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_atom_two_nodes() {
        // nodes 1/6 and 5/6 against a unit atom at 1/2: |H| = 3 at both
        let cfg = ExponentConfig::new(2.0, 1.0).unwrap();
        assert!((selfsim_energy(&cfg, 0, 1).unwrap() - 9.0).abs() < 1e-13);
        let cfg = ExponentConfig::new(4.0, 1.0).unwrap();
        assert!((selfsim_energy(&cfg, 0, 1).unwrap() - 81.0).abs() < 1e-12);
    }

    #[test]
    fn increases_with_sigma_depth() {
        let cfg = ExponentConfig::new(2.0, 1.0).unwrap();
        let v: Vec<f64> = (0..5).map(|k| selfsim_energy(&cfg, k, 8).unwrap()).collect();
        assert!(v.windows(2).all(|w| w[1] > w[0]), "{v:?}");
    }

    #[test]
    fn collision_at_equal_depths() {
        let cfg = ExponentConfig::new(2.0, 1.0).unwrap();
        assert!(selfsim_energy(&cfg, 0, 0).is_err());
    }
}
