//! Browser bindings for the weightlab demo page. Every export returns a flat
//! `Float64Array`; the layout is given on each function.

use wasm_bindgen::prelude::*;
use weightlab::cantor::{gap, sigma_total_mass_closed, sigma_weight, TriadicIndex};
use weightlab::criteria::{fit_growth, geometric_cutoffs, quad_lhs_closed, quad_rhs_closed_series};
use weightlab::transform::{find_zero, OmegaField};
use weightlab::{Error, ExponentConfig, Result};

/// Largest ω depth offered in the page; keeps a curve under a few milliseconds.
const MAX_DEPTH: u32 = 22;
const MAX_SAMPLES: usize = 2000;

fn exponents(p: f64, delta: f64, dual: bool) -> Result<ExponentConfig> {
    let cfg = ExponentConfig::new(p, delta)?;
    Ok(if dual { cfg.dual_swap() } else { cfg })
}

/// `[x, Hω_N(x), bound]` at `samples` points across gap `(k, j)`, followed by
/// the zero of Hω_N in that gap.
pub fn gap_curve(k: u32, j: u64, depth: u32, samples: usize) -> Result<Vec<f64>> {
    if depth > MAX_DEPTH || depth <= k {
        return Err(Error::InvalidParameter(format!(
            "depth must lie in {}..={MAX_DEPTH}",
            k + 1
        )));
    }
    if !(2..=MAX_SAMPLES).contains(&samples) {
        return Err(Error::InvalidParameter(format!(
            "samples must lie in 2..={MAX_SAMPLES}"
        )));
    }
    let idx = TriadicIndex::new(k, j)?;
    let g = gap(idx);
    let field = OmegaField::new(depth)?;
    let mut out = Vec::with_capacity(3 * samples + 1);
    for i in 0..samples {
        // Stay a hair inside the open gap, where the transform is finite.
        let t = 0.002 + 0.996 * i as f64 / (samples - 1) as f64;
        let x = g.left() + t * g.length();
        let v = field.hilbert(x)?;
        out.extend([x, v.value, v.error_bound]);
    }
    out.push(find_zero(idx, 1e-12, depth)?.0);
    Ok(out)
}

/// `[N, rhs(N), lhs(N)]` rows for `points` geometric cutoffs up to `nmax`,
/// then `[alpha, target, intercept, max_residual]` of the growth fit.
pub fn quad_growth(p: f64, delta: f64, dual: bool, nmax: u64, points: usize) -> Result<Vec<f64>> {
    if !(1_000..=10_000_000).contains(&nmax) || !(4..=40).contains(&points) {
        return Err(Error::InvalidParameter(
            "nmax must lie in 1e3..=1e7 and points in 4..=40".into(),
        ));
    }
    let cfg = exponents(p, delta, dual)?;
    let cutoffs = geometric_cutoffs(10, nmax, points);
    let rhs = quad_rhs_closed_series(&cfg, &cutoffs);
    let mut out = Vec::with_capacity(3 * points + 4);
    let mut fit_points = Vec::new();
    for (&n, &r) in cutoffs.iter().zip(&rhs) {
        out.extend([n as f64, r, quad_lhs_closed(&cfg, n)]);
        if n >= 1_000 {
            fit_points.push((n as f64, r));
        }
    }
    let fit = fit_growth(&fit_points, &cfg)?;
    out.extend([fit.alpha, fit.target, fit.intercept, fit.max_residual]);
    Ok(out)
}

/// `[k, s^k, 2^k s^k, cumulative mass]` for `k = 0..=generations`.
pub fn sigma_profile(p: f64, generations: u32) -> Result<Vec<f64>> {
    if generations > 60 {
        return Err(Error::InvalidParameter("generations must be at most 60".into()));
    }
    let cfg = ExponentConfig::new(p, 1.0)?;
    Ok((0..=generations)
        .flat_map(|k| {
            let s = sigma_weight(&cfg, k).value();
            [k as f64, s, s * 2f64.powi(k as i32), sigma_total_mass_closed(&cfg, k)]
        })
        .collect())
}

fn js<T>(r: Result<T>) -> std::result::Result<T, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = gapCurve)]
pub fn gap_curve_js(k: u32, j: u32, depth: u32, samples: u32) -> std::result::Result<Vec<f64>, JsError> {
    js(gap_curve(k, j as u64, depth, samples as usize))
}

#[wasm_bindgen(js_name = quadGrowth)]
pub fn quad_growth_js(
    p: f64,
    delta: f64,
    dual: bool,
    nmax: f64,
    points: u32,
) -> std::result::Result<Vec<f64>, JsError> {
    js(quad_growth(p, delta, dual, nmax as u64, points as usize))
}

#[wasm_bindgen(js_name = sigmaProfile)]
pub fn sigma_profile_js(p: f64, generations: u32) -> std::result::Result<Vec<f64>, JsError> {
    js(sigma_profile(p, generations))
}
