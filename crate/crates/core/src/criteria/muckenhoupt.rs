use crate::cantor::{gap, interval, pow3, AtomicMeasure, Interval, TriadicIndex};
use crate::criteria::{format_real, ScanResult, ScanRow, WeightPair};
use crate::error::{Error, Result};
use crate::par;
use crate::sum::NeumaierSum;
use crate::transform::CertifiedValue;

const ROUNDING: f64 = 64.0 * f64::EPSILON;

/// `∫ |I|^{q-1} / (|I| + dist(x, I))^q dμ(x)` for an atomic μ.
///
/// The bound covers what the atoms stand in for: for a quadrature of ω each
/// node may sit anywhere in its cylinder, and for a truncated σ the missing
/// generations add at most their mass times the kernel maximum `1/|I|`.
pub fn ap_tail(interval: &Interval, mu: &AtomicMeasure, q: f64) -> Result<CertifiedValue> {
    if !(q > 1.0 && q.is_finite()) {
        return Err(Error::InvalidParameter(format!("tail exponent {q} must exceed 1")));
    }
    let len = interval.length();
    if len.is_nan() || len <= 0.0 {
        return Err(Error::InvalidParameter(format!("interval {interval} has no length")));
    }
    let kernel = |d: f64| (len / (len + d)).powf(q) / len;
    let half = mu.provenance().omega_depth().map(|n| 0.5 / pow3(n) as f64);
    let mut value = NeumaierSum::new();
    let mut bound = 0.0;
    for a in mu.atoms() {
        let d = interval.dist(a.position);
        value += a.mass * kernel(d);
        if let Some(h) = half {
            let near = (d - h).max(0.0);
            bound += a.mass * q * h * kernel(near) / (len + near);
        }
    }
    let value = value.value();
    let tail = mu.provenance().sigma_tail_mass().unwrap_or(0.0) / len;
    Ok(CertifiedValue::new(value, bound + tail + ROUNDING * value))
}

/// Labelled intervals `I_j^k` for `k <= max_k`, optionally followed by the
/// closures of the gaps of the same generations.
pub fn ap_family(max_k: u32, with_gaps: bool) -> Vec<(String, Interval)> {
    let mut out: Vec<(String, Interval)> = (0..=max_k)
        .flat_map(TriadicIndex::generation)
        .map(|i| (format!("I{i}"), interval(i)))
        .collect();
    if with_gaps {
        out.extend(
            (0..=max_k)
                .flat_map(TriadicIndex::generation)
                .map(|i| (format!("G{i}"), gap(i).closure())),
        );
    }
    out
}

/// The two-tailed Muckenhoupt product
/// `(tail of the target, p)^{1/p} · (tail of the source, p')^{1/p'}` per interval.
pub fn ap_constant(pair: &WeightPair, family: &[(String, Interval)]) -> Result<ScanResult> {
    if family.is_empty() {
        return Err(Error::InvalidParameter("empty interval family".into()));
    }
    let p = pair.cfg().p();
    let pp = pair.cfg().p_prime();
    let target = pair.measure(pair.target());
    let source = pair.measure(pair.source());
    let rows = par::try_map(family, |(label, iv)| {
        let a = ap_tail(iv, target, p)?;
        let b = ap_tail(iv, source, pp)?;
        let value = a.value.powf(1.0 / p) * b.value.powf(1.0 / pp);
        let upper = (a.value + a.error_bound).powf(1.0 / p) * (b.value + b.error_bound).powf(1.0 / pp);
        Ok::<_, Error>(ScanRow {
            params: vec![label.clone(), format_real(iv.left()), format_real(iv.right())],
            value,
            error_bound: Some((upper - value).max(0.0)),
            depth_omega: Some(pair.omega_depth()),
            depth_sigma: Some(pair.sigma_generation()),
        })
    })?;
    let mut scan = ScanResult::new(["interval", "left", "right"]);
    scan.rows = rows;
    Ok(scan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cantor::{Atom, Provenance, Variant};
    use crate::config::ExponentConfig;

    fn unit_atom(x: f64) -> AtomicMeasure {
        AtomicMeasure::new(vec![Atom::new(x, 1.0)], Provenance::Custom).unwrap()
    }

    #[test]
    fn single_atom_values() {
        let v = ap_tail(&Interval::unit(), &unit_atom(0.5), 2.0).unwrap();
        assert!((v.value - 1.0).abs() < 1e-15);
        let v = ap_tail(&Interval::unit(), &unit_atom(2.0), 2.0).unwrap();
        assert!((v.value - 0.25).abs() < 1e-15);
        assert!(ap_tail(&Interval::unit(), &unit_atom(2.0), 1.0).is_err());
    }

    #[test]
    fn one_atom_product() {
        let cfg = ExponentConfig::new(2.0, 1.0).unwrap();
        let pair = WeightPair::new(cfg, 0, 0, Variant::Centered, None).unwrap();
        let scan = ap_constant(&pair, &ap_family(0, false)).unwrap();
        // both measures are a unit atom at 1/2
        assert!((scan.sup() - 1.0).abs() < 1e-15);
        let err = scan.rows[0].error_bound.unwrap();
        assert!(err > 0.0 && err.is_finite());
    }

    #[test]
    fn mirror_invariance() {
        let cfg = ExponentConfig::new(4.0, 1.0).unwrap();
        let pair = WeightPair::new(cfg, 8, 7, Variant::Centered, None).unwrap();
        let fam = ap_family(3, true);
        let mirrored: Vec<_> = fam.iter().map(|(l, i)| (l.clone(), i.mirror())).collect();
        let a = ap_constant(&pair, &fam).unwrap();
        let b = ap_constant(&pair, &mirrored).unwrap();
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert!((x.value - y.value).abs() <= 1e-12 * x.value);
        }
    }

    #[test]
    fn roles_do_not_change_the_product() {
        let cfg = ExponentConfig::new(4.0, 1.0).unwrap();
        let fam = ap_family(2, true);
        let a = ap_constant(&WeightPair::new(cfg, 7, 6, Variant::Centered, None).unwrap(), &fam).unwrap();
        let swapped = cfg.dual_swap();
        let b = ap_constant(&WeightPair::new(swapped, 7, 6, Variant::Centered, None).unwrap(), &fam).unwrap();
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert!((x.value - y.value).abs() <= 1e-13 * x.value);
        }
    }

    #[test]
    fn family_layout() {
        let f = ap_family(2, true);
        assert_eq!(f.len(), 14);
        assert_eq!(f[0].0, "I(0,1)");
        assert_eq!(f[7].0, "G(0,1)");
    }
}
