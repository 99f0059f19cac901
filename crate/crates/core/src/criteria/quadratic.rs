//! The square-function Muckenhoupt functional on the family
//! `f_{k,j} = β_k 1_{θI_j^k}`, `1 <= k <= N`, paired with the intervals `I_j^k`.
//!
//! `θI` is the other Cantor child of the parent of `I`. The family starts at
//! generation 1 because the root interval has no sibling.

use crate::cantor::{interval, omega_mass, AtomicMeasure, Provenance, TriadicIndex};
use crate::config::{ExponentConfig, Roles};
use crate::error::{Error, Result};
use crate::sum::NeumaierSum;

const LN_3_2: f64 = 0.405_465_108_108_164_4;

/// Coefficients `a_k = (k+1)^{1/p} (ln(k+2))^{(1+δ)/p}` and
/// `β_k = (3/2)^{(p'-1)k} / a_k`, for the exponent currently under test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TestFamily {
    cfg: ExponentConfig,
    max_generation: u32,
}

impl TestFamily {
    pub fn new(cfg: ExponentConfig, max_generation: u32) -> Self {
        Self { cfg, max_generation }
    }

    pub fn max_generation(&self) -> u32 {
        self.max_generation
    }

    pub fn ln_a(&self, k: u64) -> f64 {
        let k = k as f64;
        ((k + 1.0).ln() + (1.0 + self.cfg.delta()) * (k + 2.0).ln().ln()) / self.cfg.p()
    }

    pub fn a(&self, k: u64) -> f64 {
        self.ln_a(k).exp()
    }

    pub fn ln_beta(&self, k: u64) -> f64 {
        (self.cfg.p_prime() - 1.0) * k as f64 * LN_3_2 - self.ln_a(k)
    }

    /// Overflows to infinity once `ln β_k` passes about 709; use
    /// [`ln_beta`](Self::ln_beta) there.
    pub fn beta(&self, k: u64) -> f64 {
        self.ln_beta(k).exp()
    }
}

/// `(a_k, β_k)`.
pub fn test_family_coeffs(cfg: &ExponentConfig, k: u64) -> (f64, f64) {
    let fam = TestFamily::new(*cfg, 0);
    (fam.a(k), fam.beta(k))
}

fn check_direct(cfg: &ExponentConfig) -> Result<()> {
    if cfg.roles() != Roles::Direct {
        return Err(Error::InvalidParameter(
            "square-function sums over σ atoms need the direct roles; use the closed forms for the dual exponent"
                .into(),
        ));
    }
    Ok(())
}

fn check_depth(sigma: &AtomicMeasure, family_n: u32) -> Result<u32> {
    let depth = match sigma.provenance() {
        Provenance::Sigma { max_generation, .. } => max_generation,
        _ => sigma.max_generation().unwrap_or(0),
    };
    if depth < family_n {
        return Err(Error::InvalidParameter(format!(
            "σ truncated at generation {depth} cannot resolve a family of depth {family_n}"
        )));
    }
    Ok(depth)
}

/// `ln(exp(a) + exp(b))`.
fn ln_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `‖(Σ f²)^{1/2}‖_{L^p(σ)}^p`, summed atom by atom.
///
/// An atom of generation `l` lies in exactly one `θI_j^k` for each
/// `1 <= k <= l`, so its integrand is `(Σ_{k <= min(l, N)} β_k²)^{p/2}`.
pub fn quad_lhs_direct(cfg: &ExponentConfig, family_n: u32, sigma: &AtomicMeasure) -> Result<f64> {
    check_direct(cfg)?;
    check_depth(sigma, family_n)?;
    let fam = TestFamily::new(*cfg, family_n);
    let mut ln_prefix = vec![f64::NEG_INFINITY; family_n as usize + 1];
    for k in 1..=family_n as usize {
        ln_prefix[k] = ln_add(ln_prefix[k - 1], 2.0 * fam.ln_beta(k as u64));
    }
    let half_p = 0.5 * cfg.p();
    let mut total = NeumaierSum::new();
    for atom in sigma.atoms() {
        let l = atom
            .generation()
            .ok_or_else(|| Error::InvalidParameter(format!("σ atom at {} has no generation", atom.position)))?;
        let m = l.min(family_n) as usize;
        if m > 0 {
            total += (atom.mass.ln() + half_p * ln_prefix[m]).exp();
        }
    }
    Ok(total.value())
}

/// `Σ_{k=1}^{N} 1/((k+1) (ln(k+2))^{1+δ})`.
pub fn quad_lhs_closed(cfg: &ExponentConfig, family_n: u64) -> f64 {
    let e = 1.0 + cfg.delta();
    let mut s = NeumaierSum::new();
    for k in 1..=family_n {
        let k = k as f64;
        s += 1.0 / ((k + 1.0) * (k + 2.0).ln().powf(e));
    }
    s.value()
}

/// `β_k Σ_{x ∈ θI ∖ 3I} m(x)/|x - c(I)|` for every `I = I_j^k`, `1 <= k <= N`,
/// laid out breadth-first (the root slot stays zero).
pub(crate) fn rhs_terms(cfg: &ExponentConfig, family_n: u32, sigma: &AtomicMeasure) -> Result<Vec<f64>> {
    check_direct(cfg)?;
    check_depth(sigma, family_n)?;
    let fam = TestFamily::new(*cfg, family_n);
    let slots = (1usize << (family_n + 1)) - 1;
    let mut sums = vec![NeumaierSum::new(); slots];
    for atom in sigma.atoms() {
        let Some(idx) = atom.index else {
            return Err(Error::InvalidParameter(format!(
                "σ atom at {} has no tree index",
                atom.position
            )));
        };
        for k in 1..=idx.k().min(family_n) {
            let owner = idx.ancestor(k).expect("ancestor within generation").sibling()?;
            let iv = interval(owner);
            if iv.triple().contains(atom.position) {
                continue;
            }
            sums[owner.flat()] += atom.mass / (atom.position - iv.center()).abs();
        }
    }
    let mut terms = vec![0.0; slots];
    for k in 1..=family_n {
        let ln_beta = fam.ln_beta(k as u64);
        for idx in TriadicIndex::generation(k) {
            let t = sums[idx.flat()].value();
            if t > 0.0 {
                terms[idx.flat()] = (ln_beta + t.ln()).exp();
            }
        }
    }
    Ok(terms)
}

/// `‖(Σ_{k,j} (1_{I_j^k} ∫_{ℝ∖3I} f_{k,j}(x)/|x - c| dσ)²)^{1/2}‖_{L^p(ω)}^p`.
///
/// The square function is constant on each depth-N cylinder, so the ω
/// integral is an exact sum of `2^N` terms.
pub fn quad_rhs_direct(cfg: &ExponentConfig, family_n: u32, sigma: &AtomicMeasure) -> Result<f64> {
    let terms = rhs_terms(cfg, family_n, sigma)?;
    let mut square = vec![0.0; terms.len()];
    for k in 1..=family_n {
        for idx in TriadicIndex::generation(k) {
            let parent = idx.parent().expect("k >= 1").flat();
            square[idx.flat()] = square[parent] + terms[idx.flat()].powi(2);
        }
    }
    let half_p = 0.5 * cfg.p();
    let mass = omega_mass(family_n);
    let total: NeumaierSum = TriadicIndex::generation(family_n)
        .map(|c| mass * square[c.flat()].powf(half_p))
        .sum();
    Ok(total.value())
}

/// `(Σ_{k=1}^{N} a_k^{-2})^{p/2}`.
pub fn quad_rhs_closed(cfg: &ExponentConfig, family_n: u64) -> f64 {
    quad_rhs_closed_series(cfg, &[family_n])[0]
}

/// [`quad_rhs_closed`] at several cutoffs, from one pass over the series.
pub fn quad_rhs_closed_series(cfg: &ExponentConfig, cutoffs: &[u64]) -> Vec<f64> {
    let fam = TestFamily::new(*cfg, 0);
    let mut order: Vec<usize> = (0..cutoffs.len()).collect();
    order.sort_by_key(|&i| cutoffs[i]);
    let mut out = vec![0.0; cutoffs.len()];
    let mut s = NeumaierSum::new();
    let mut k = 0u64;
    let half_p = 0.5 * cfg.p();
    for i in order {
        while k < cutoffs[i] {
            k += 1;
            s += (-2.0 * fam.ln_a(k)).exp();
        }
        let v = s.value();
        out[i] = if v > 0.0 { (half_p * v.ln()).exp() } else { 0.0 };
    }
    out
}
