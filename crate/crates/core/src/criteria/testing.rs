use crate::cantor::{omega_mass, pow3, Interval, TriadicIndex, Variant};
use crate::criteria::{ScanResult, ScanRow, Side, WeightPair};
use crate::error::{Error, Result};
use crate::par;
use crate::sum::NeumaierSum;
use crate::transform::{cauchy_sum, CertifiedValue};

/// Deepest generation of intervals in a testing scan.
pub const MAX_TESTING_GENERATION: u32 = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    /// `∫_I |H(1_I source)|^p d target`.
    Forward,
    /// `∫_I |H(1_I target)|^{p'} d source`.
    Backward,
}

impl Direction {
    pub fn as_str(&self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        }
    }
}

/// The local testing integral over `interval`.
///
/// With the direct roles, forward is `∫_I |H1_Iσ|^p dω` and backward is
/// `∫_I |H1_Iω|^{p'} dσ`. The error bound covers
///
/// * the displacement of every ω node within its cylinder, through
///   `Σ m/dist²` of the operator's kernel, and the expansion truncation;
/// * when σ is integrated against, the σ generations past the truncation.
///   For zeroed σ and a Cantor interval of generation k the transform at a
///   missing atom is at most `(1 - 2^{-k}) 3^k` in size. For centered σ no
///   such bound exists and the tail is reported as infinite.
///
/// Truncation of σ on the operator side is part of the model and not bounded.
pub fn testing_norm(pair: &WeightPair, interval: &Interval, direction: Direction) -> Result<CertifiedValue> {
    let (operand, integrator, q) = match direction {
        Direction::Forward => (pair.source(), pair.target(), pair.cfg().p()),
        Direction::Backward => (pair.target(), pair.source(), pair.cfg().p_prime()),
    };
    let slack = pair.slack();
    let points = pair.measure(integrator).restrict(interval);
    let cantor = interval.cantor_index();

    let samples: Vec<(f64, f64)> = match cantor {
        Some(idx) => {
            let field = pair.field(operand);
            par::try_map(points.atoms(), |a| {
                let s = field.evaluate(idx, a.position, slack)?;
                Ok::<_, Error>(integrand(a.mass, s.value, slack * s.kernel_sq + s.truncation, q))
            })?
        }
        None => {
            let mu = pair.measure(operand).restrict(interval);
            par::try_map(points.atoms(), |a| {
                let f = cauchy_sum(&mu, a.position)?;
                let mut kernel_sq = 0.0;
                for b in mu.atoms() {
                    let gap = (b.position - a.position).abs() - slack;
                    if gap <= 0.0 {
                        return Err(Error::TooClose {
                            x: a.position,
                            position: b.position,
                            slack,
                        });
                    }
                    kernel_sq += b.mass / (gap * gap);
                }
                Ok(integrand(a.mass, f, slack * kernel_sq, q))
            })?
        }
    };
    let mut value = NeumaierSum::new();
    let mut bound = 0.0;
    for (v, b) in samples {
        value += v;
        bound += b;
    }
    let value = value.value();

    let tail = if integrator == Side::Sigma {
        sigma_integrator_tail(pair, interval, cantor, q)
    } else {
        0.0
    };
    Ok(CertifiedValue::new(value, bound + tail + 64.0 * f64::EPSILON * value))
}

/// `m|F|^q` and an upper bound on how much it can grow when `|F|` moves by `delta`.
fn integrand(mass: f64, f: f64, delta: f64, q: f64) -> (f64, f64) {
    let f = f.abs();
    (mass * f.powf(q), mass * q * (f + delta).powf(q - 1.0) * delta)
}

fn sigma_integrator_tail(pair: &WeightPair, interval: &Interval, cantor: Option<TriadicIndex>, q: f64) -> f64 {
    let tail = pair.sigma_tail_mass();
    if tail == 0.0 || interval.right() <= 0.0 || interval.left() >= 1.0 {
        return 0.0;
    }
    match (pair.variant(), cantor) {
        (Variant::Zeroed, Some(idx)) if idx.k() == 0 => 0.0,
        (Variant::Zeroed, Some(idx)) => {
            let k = idx.k();
            let outside = (1.0 - omega_mass(k)) * pow3(k) as f64;
            outside.powf(q) * omega_mass(k) * tail
        }
        _ => f64::INFINITY,
    }
}

/// Forward and backward rows of a testing scan.
#[derive(Clone, Debug, PartialEq)]
pub struct TestingScan {
    pub forward: ScanResult,
    pub backward: ScanResult,
}

impl TestingScan {
    /// Both directions in one table, forward rows first.
    pub fn combined(&self) -> ScanResult {
        let mut all = self.forward.clone();
        all.extend(self.backward.clone());
        all
    }
}

/// Normalised testing integrals over every `I_j^k` with `k <= max_k`.
///
/// Forward rows are divided by `|I|` in the source measure, backward rows by
/// `|I|` in the target measure; the sup of each table estimates the testing
/// constant raised to the power `p` (forward) or `p'` (backward).
pub fn testing_scan(pair: &WeightPair, max_k: u32) -> Result<TestingScan> {
    if max_k > MAX_TESTING_GENERATION {
        return Err(Error::ResourceLimit {
            what: "testing scan generation",
            requested: max_k as u64,
            limit: MAX_TESTING_GENERATION as u64,
        });
    }
    let indices: Vec<TriadicIndex> = (0..=max_k).flat_map(TriadicIndex::generation).collect();
    let run = |direction: Direction| -> Result<ScanResult> {
        let normaliser = match direction {
            Direction::Forward => pair.source(),
            Direction::Backward => pair.target(),
        };
        let mut scan = ScanResult::new(["direction", "k", "j"]);
        for &idx in &indices {
            let iv = crate::cantor::interval(idx);
            let raw = testing_norm(pair, &iv, direction)?;
            let mass = pair.mass(normaliser, idx);
            let (value, error_bound) = if mass > 0.0 {
                (raw.value / mass, raw.error_bound / mass)
            } else {
                (0.0, 0.0)
            };
            scan.rows.push(ScanRow {
                params: vec![direction.as_str().into(), idx.k().to_string(), idx.j().to_string()],
                value,
                error_bound: Some(error_bound),
                depth_omega: Some(pair.omega_depth()),
                depth_sigma: Some(pair.sigma_generation()),
            });
        }
        Ok(scan)
    };
    Ok(TestingScan {
        forward: run(Direction::Forward)?,
        backward: run(Direction::Backward)?,
    })
}
