use crate::config::ExponentConfig;
use crate::error::{Error, Result};

/// Least-squares exponent of a growth sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct GrowthFit {
    pub alpha: f64,
    pub intercept: f64,
    pub max_residual: f64,
    /// Expected exponent `p/2 - 1`.
    pub target: f64,
    /// Power of `ln N` divided out before fitting.
    pub log_correction: f64,
    /// Residual of every point, in input order.
    pub residuals: Vec<f64>,
}

impl GrowthFit {
    pub fn within(&self, tolerance: f64) -> bool {
        (self.alpha - self.target).abs() <= tolerance
    }
}

/// Fits `ln(v (ln N)^c) = α ln N + c₀` to points `(N, v)`.
///
/// The expected growth is `N^{p/2-1} / (ln N)^{1+δ}`, so `c = 1 + δ` when
/// `p > 2`. For `p <= 2` the sequence converges and carries no such factor;
/// there `c = 0` and the fit measures the plain log-log slope.
pub fn fit_growth(points: &[(f64, f64)], cfg: &ExponentConfig) -> Result<GrowthFit> {
    let target = 0.5 * cfg.p() - 1.0;
    let correction = if target > 0.0 { 1.0 + cfg.delta() } else { 0.0 };
    fit_loglog(points, correction, target)
}

/// Fits `ln(v (ln N)^correction) = α ln N + c₀`; `target` is only recorded.
pub fn fit_loglog(points: &[(f64, f64)], correction: f64, target: f64) -> Result<GrowthFit> {
    if points.len() < 4 {
        return Err(Error::DegenerateFit(format!(
            "{} points, need at least 4",
            points.len()
        )));
    }
    if let Some(&(n, v)) = points
        .iter()
        .find(|&&(n, v)| !(n > 1.0 && v > 0.0 && n.is_finite() && v.is_finite()))
    {
        return Err(Error::DegenerateFit(format!(
            "point ({n}, {v}) is outside the fit domain"
        )));
    }
    let xy: Vec<(f64, f64)> = points
        .iter()
        .map(|&(n, v)| (n.ln(), v.ln() + correction * n.ln().ln()))
        .collect();
    let count = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / count;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / count;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx.is_nan() || sxx <= 1e-12 * mx.abs().max(1.0) {
        return Err(Error::DegenerateFit("cutoffs do not spread".into()));
    }
    let alpha = sxy / sxx;
    let intercept = my - alpha * mx;
    let residuals: Vec<f64> = xy.iter().map(|&(x, y)| y - (alpha * x + intercept)).collect();
    let max_residual = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    Ok(GrowthFit {
        alpha,
        intercept,
        max_residual,
        target,
        log_correction: correction,
        residuals,
    })
}

/// `count` cutoffs spaced geometrically from `lo` to `hi`, rounded to integers.
pub fn geometric_cutoffs(lo: u64, hi: u64, count: usize) -> Vec<u64> {
    if count < 2 || lo >= hi {
        return vec![lo];
    }
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut out: Vec<u64> = (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp().round() as u64)
        .collect();
    out.dedup();
    out
}
