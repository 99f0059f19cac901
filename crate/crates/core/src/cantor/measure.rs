//! The Cantor measure ω and the gap-supported atomic measures σ̇_p, σ_p.

use std::fmt;

use crate::cantor::geometry::{gap, interval, pow3, Interval, TriadicIndex};
use crate::config::{sigma_ratio, ExponentConfig};
use crate::error::{Error, Result};
use crate::sum::compensated_sum;
use crate::transform::ZeroTable;

/// Largest depth for a materialised ω quadrature (2^24 atoms).
pub const MAX_OMEGA_DEPTH: u32 = 24;
/// Largest truncation generation for σ (2^23 - 1 atoms).
pub const MAX_SIGMA_GENERATION: u32 = 22;

/// `|I_j^k|_ω = 2^{-k}`; exact in `f64`.
pub fn omega_mass(k: u32) -> f64 {
    (-(k as f64)).exp2()
}

/// A σ generation weight kept in the log domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SigmaWeight {
    ln: f64,
}

impl SigmaWeight {
    /// Below this the plain double is no longer trusted.
    pub const UNDERFLOW_GUARD: f64 = 1e-300;

    pub fn ln(&self) -> f64 {
        self.ln
    }

    pub fn value(&self) -> f64 {
        self.ln.exp()
    }

    pub fn needs_log_domain(&self) -> bool {
        self.ln < Self::UNDERFLOW_GUARD.ln()
    }
}

/// `s^k = 2^{k(p'-1)} 3^{-k p'}`, independent of the position `j`.
pub fn sigma_weight(cfg: &ExponentConfig, k: u32) -> SigmaWeight {
    let q = cfg.sigma_conjugate();
    let k = k as f64;
    SigmaWeight {
        ln: k * ((q - 1.0) * std::f64::consts::LN_2 - q * 3f64.ln()),
    }
}

/// `(s^k)^{p-1} |I_j^k|_ω / |I_j^k|^p`, equal to one for every `k` by the
/// choice of weights.
pub fn precursor_ratio(cfg: &ExponentConfig, k: u32) -> f64 {
    let p = cfg.sigma_exponent();
    let kf = k as f64;
    ((p - 1.0) * sigma_weight(cfg, k).ln() - kf * std::f64::consts::LN_2 + kf * p * 3f64.ln()).exp()
}

/// Mass of σ truncated at generation `max_generation`, from the geometric series.
pub fn sigma_total_mass_closed(cfg: &ExponentConfig, max_generation: u32) -> f64 {
    let r = cfg.sigma_ratio();
    (1.0 - r.powi(max_generation as i32 + 1)) / (1.0 - r)
}

/// `|I_j^k|_σ` for σ truncated at `max_generation`.
pub fn sigma_interval_mass_closed(cfg: &ExponentConfig, k: u32, max_generation: u32) -> f64 {
    if k > max_generation {
        return 0.0;
    }
    let r = cfg.sigma_ratio();
    sigma_weight(cfg, k).value() * (1.0 - r.powi((max_generation - k) as i32 + 1)) / (1.0 - r)
}

/// Mass σ places in generations beyond `max_generation`.
pub fn sigma_tail_mass(cfg: &ExponentConfig, max_generation: u32) -> f64 {
    let r = cfg.sigma_ratio();
    r.powi(max_generation as i32 + 1) / (1.0 - r)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Atom {
    pub position: f64,
    pub mass: f64,
    /// Deepest Cantor interval containing the atom: the cylinder of an ω node,
    /// or the interval whose gap holds a σ atom.
    pub index: Option<TriadicIndex>,
}

impl Atom {
    pub fn new(position: f64, mass: f64) -> Self {
        Self {
            position,
            mass,
            index: None,
        }
    }

    pub fn generation(&self) -> Option<u32> {
        self.index.map(|i| i.k())
    }
}

/// Where the σ atoms sit inside their gaps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Gap centers `ż_j^k`: σ̇.
    Centered,
    /// Zeros `z_j^k` of Hω: σ.
    Zeroed,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Centered => "centered",
            Variant::Zeroed => "zeroed",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "centered" => Ok(Variant::Centered),
            "zeroed" => Ok(Variant::Zeroed),
            other => Err(Error::InvalidParameter(format!(
                "variant must be centered or zeroed, got {other:?}"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Provenance {
    OmegaQuadrature {
        depth: u32,
    },
    Sigma {
        variant: Variant,
        p: f64,
        max_generation: u32,
    },
    Custom,
}

impl Provenance {
    pub fn omega_depth(&self) -> Option<u32> {
        match self {
            Provenance::OmegaQuadrature { depth } => Some(*depth),
            _ => None,
        }
    }

    /// Mass dropped by the σ truncation.
    pub fn sigma_tail_mass(&self) -> Option<f64> {
        match *self {
            Provenance::Sigma { p, max_generation, .. } => {
                let r = sigma_ratio(p / (p - 1.0));
                Some(r.powi(max_generation as i32 + 1) / (1.0 - r))
            }
            _ => None,
        }
    }
}

/// Finitely many weighted point masses, sorted by position.
#[derive(Clone, Debug)]
pub struct AtomicMeasure {
    atoms: Vec<Atom>,
    provenance: Provenance,
    total_mass: f64,
}

impl AtomicMeasure {
    /// Sorts the atoms and checks positions are distinct and masses positive.
    pub fn new(mut atoms: Vec<Atom>, provenance: Provenance) -> Result<Self> {
        atoms.sort_by(|a, b| a.position.total_cmp(&b.position));
        for a in &atoms {
            if !a.position.is_finite() {
                return Err(Error::InvalidParameter(format!("atom position {}", a.position)));
            }
            if !(a.mass.is_finite() && a.mass >= f64::MIN_POSITIVE) {
                return Err(Error::InvalidParameter(format!(
                    "atom at {} has mass {}",
                    a.position, a.mass
                )));
            }
        }
        if let Some(w) = atoms.windows(2).find(|w| w[0].position >= w[1].position) {
            return Err(Error::InvalidParameter(format!(
                "two atoms share position {}",
                w[0].position
            )));
        }
        Ok(Self::from_sorted(atoms, provenance))
    }

    fn from_sorted(atoms: Vec<Atom>, provenance: Provenance) -> Self {
        let total_mass = compensated_sum(atoms.iter().map(|a| a.mass));
        Self {
            atoms,
            provenance,
            total_mass,
        }
    }

    pub fn empty() -> Self {
        Self::from_sorted(Vec::new(), Provenance::Custom)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Deepest generation among indexed atoms.
    pub fn max_generation(&self) -> Option<u32> {
        self.atoms.iter().filter_map(Atom::generation).max()
    }

    /// Atoms lying in `interval`, honouring its open or closed boundary.
    pub fn restrict(&self, interval: &Interval) -> AtomicMeasure {
        let (a, b) = (interval.left(), interval.right());
        let lo = self.atoms.partition_point(|x| x.position < a);
        let hi = self.atoms.partition_point(|x| x.position <= b);
        let atoms = self.atoms[lo..hi]
            .iter()
            .filter(|x| interval.contains(x.position))
            .copied()
            .collect();
        Self::from_sorted(atoms, self.provenance)
    }

    /// `|I|_μ`.
    pub fn mass_in(&self, interval: &Interval) -> f64 {
        self.restrict(interval).total_mass
    }
}

/// ω replaced by 2^N equal point masses at the midpoints of the `I_j^N`.
pub fn cantor_quadrature(depth: u32) -> Result<AtomicMeasure> {
    if depth > MAX_OMEGA_DEPTH {
        return Err(Error::ResourceLimit {
            what: "omega quadrature depth",
            requested: depth as u64,
            limit: MAX_OMEGA_DEPTH as u64,
        });
    }
    let mass = omega_mass(depth);
    let denom = (2 * pow3(depth)) as f64;
    let atoms = TriadicIndex::generation(depth)
        .map(|idx| Atom {
            position: (2 * interval(idx).numerators().0 + 1) as f64 / denom,
            mass,
            index: Some(idx),
        })
        .collect();
    Ok(AtomicMeasure::from_sorted(atoms, Provenance::OmegaQuadrature { depth }))
}

/// σ̇_p (centered) or σ_p (zeroed) truncated after generation `max_generation`.
///
/// The zeroed variant takes its positions from `zeros`, which must cover every
/// gap up to `max_generation`.
pub fn sigma_truncated(
    cfg: &ExponentConfig,
    max_generation: u32,
    variant: Variant,
    zeros: Option<&ZeroTable>,
) -> Result<AtomicMeasure> {
    if max_generation > MAX_SIGMA_GENERATION {
        return Err(Error::ResourceLimit {
            what: "sigma truncation generation",
            requested: max_generation as u64,
            limit: MAX_SIGMA_GENERATION as u64,
        });
    }
    let mut atoms = Vec::with_capacity((1usize << (max_generation + 1)) - 1);
    for k in 0..=max_generation {
        let weight = sigma_weight(cfg, k);
        let mass = weight.value();
        if weight.needs_log_domain() || mass < f64::MIN_POSITIVE {
            return Err(Error::ResourceLimit {
                what: "sigma generation before weights underflow",
                requested: k as u64,
                limit: k.saturating_sub(1) as u64,
            });
        }
        for idx in TriadicIndex::generation(k) {
            let g = gap(idx);
            let position = match variant {
                Variant::Centered => g.center(),
                Variant::Zeroed => {
                    let table = zeros.ok_or(Error::MissingZero(idx))?;
                    let z = table.get(idx).ok_or(Error::MissingZero(idx))?.z;
                    if !g.contains(z) {
                        return Err(Error::NumericalFailure(format!(
                            "tabulated zero {z} lies outside gap {idx}"
                        )));
                    }
                    z
                }
            };
            atoms.push(Atom {
                position,
                mass,
                index: Some(idx),
            });
        }
    }
    atoms.sort_by(|a, b| a.position.total_cmp(&b.position));
    Ok(AtomicMeasure::from_sorted(
        atoms,
        Provenance::Sigma {
            variant,
            p: cfg.sigma_exponent(),
            max_generation,
        },
    ))
}
