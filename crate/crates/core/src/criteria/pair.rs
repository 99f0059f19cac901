use crate::cantor::{cantor_quadrature, omega_mass, sigma_truncated, AtomicMeasure, TriadicIndex, Variant};
use crate::config::{ExponentConfig, Roles};
use crate::error::Result;
use crate::transform::{CauchyField, ClusterField, OmegaField, ZeroTable};

/// One of the two measures of a pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Omega,
    Sigma,
}

/// Truncated σ and quadrature ω together with their Cauchy fields.
///
/// The *target* measure is the one whose `L^p` norm is taken with the exponent
/// `cfg.p()`, the *source* the one the operator acts on. With the direct roles
/// the target is ω and the source σ; [`ExponentConfig::dual_swap`] exchanges them.
pub struct WeightPair {
    cfg: ExponentConfig,
    variant: Variant,
    omega: AtomicMeasure,
    sigma: AtomicMeasure,
    omega_field: OmegaField,
    sigma_field: ClusterField,
}

impl WeightPair {
    pub fn new(
        cfg: ExponentConfig,
        omega_depth: u32,
        sigma_generation: u32,
        variant: Variant,
        zeros: Option<&ZeroTable>,
    ) -> Result<Self> {
        let sigma = sigma_truncated(&cfg, sigma_generation, variant, zeros)?;
        let sigma_field = ClusterField::new(&sigma)?;
        Ok(Self {
            cfg,
            variant,
            omega: cantor_quadrature(omega_depth)?,
            sigma,
            omega_field: OmegaField::new(omega_depth)?,
            sigma_field,
        })
    }

    pub fn cfg(&self) -> &ExponentConfig {
        &self.cfg
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn omega_depth(&self) -> u32 {
        self.omega_field.depth()
    }

    pub fn sigma_generation(&self) -> u32 {
        self.sigma.max_generation().unwrap_or(0)
    }

    pub fn target(&self) -> Side {
        match self.cfg.roles() {
            Roles::Direct => Side::Omega,
            Roles::Swapped => Side::Sigma,
        }
    }

    pub fn source(&self) -> Side {
        match self.target() {
            Side::Omega => Side::Sigma,
            Side::Sigma => Side::Omega,
        }
    }

    pub fn measure(&self, side: Side) -> &AtomicMeasure {
        match side {
            Side::Omega => &self.omega,
            Side::Sigma => &self.sigma,
        }
    }

    pub fn field(&self, side: Side) -> &dyn CauchyField {
        match side {
            Side::Omega => &self.omega_field,
            Side::Sigma => &self.sigma_field,
        }
    }

    /// How far a quadrature node may sit from the mass it stands for.
    pub fn slack(&self) -> f64 {
        self.omega_field.cell_half_length()
    }

    /// Mass of the truncated σ left out beyond its last generation.
    pub fn sigma_tail_mass(&self) -> f64 {
        self.sigma.provenance().sigma_tail_mass().unwrap_or(0.0)
    }

    /// `|I_j^k|` in the truncated measure on `side`.
    pub fn mass(&self, side: Side, idx: TriadicIndex) -> f64 {
        match side {
            Side::Omega if idx.k() <= self.omega_depth() => omega_mass(idx.k()),
            Side::Omega => 0.0,
            Side::Sigma => self.sigma_field.mass(idx),
        }
    }
}
