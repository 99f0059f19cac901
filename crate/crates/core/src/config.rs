use crate::error::{Error, Result};

/// Smallest accepted exponent; keeps the conjugate exponent at most 21.
pub const P_MIN: f64 = 1.05;
pub const P_MAX: f64 = 20.0;

/// Which measure plays the source role of the operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Roles {
    /// `H(· σ): L^p(σ) -> L^p(ω)`.
    Direct,
    /// `H(· ω): L^{p'}(ω) -> L^{p'}(σ)`, the dual inequality.
    Swapped,
}

/// Exponent `p`, its conjugate `p'`, the family parameter `δ` and the role
/// assignment of the two measures.
///
/// `p()` is always the exponent of the inequality currently under test. After
/// [`dual_swap`](Self::dual_swap) it is the old `p'`, while the weights of σ
/// keep being built from the original exponent (see
/// [`sigma_exponent`](Self::sigma_exponent)).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExponentConfig {
    p: f64,
    p_prime: f64,
    delta: f64,
    roles: Roles,
}

impl ExponentConfig {
    pub fn new(p: f64, delta: f64) -> Result<Self> {
        if !(P_MIN..=P_MAX).contains(&p) {
            return Err(Error::InvalidParameter(format!(
                "p = {p} is outside [{P_MIN}, {P_MAX}]"
            )));
        }
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::InvalidParameter(format!("delta = {delta} must be positive")));
        }
        Ok(Self {
            p,
            p_prime: p / (p - 1.0),
            delta,
            roles: Roles::Direct,
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn p_prime(&self) -> f64 {
        self.p_prime
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn roles(&self) -> Roles {
        self.roles
    }

    /// Exchange `(p, σ, ω)` for `(p', ω, σ)`. An involution.
    pub fn dual_swap(&self) -> Self {
        Self {
            p: self.p_prime,
            p_prime: self.p,
            delta: self.delta,
            roles: match self.roles {
                Roles::Direct => Roles::Swapped,
                Roles::Swapped => Roles::Direct,
            },
        }
    }

    /// The exponent σ_p was constructed for.
    pub fn sigma_exponent(&self) -> f64 {
        match self.roles {
            Roles::Direct => self.p,
            Roles::Swapped => self.p_prime,
        }
    }

    /// Conjugate of [`sigma_exponent`](Self::sigma_exponent); the `p'` in the weights.
    pub fn sigma_conjugate(&self) -> f64 {
        match self.roles {
            Roles::Direct => self.p_prime,
            Roles::Swapped => self.p,
        }
    }

    /// Ratio `(2/3)^{p'}` of successive generation masses of σ.
    pub fn sigma_ratio(&self) -> f64 {
        sigma_ratio(self.sigma_conjugate())
    }
}

pub(crate) fn sigma_ratio(conjugate: f64) -> f64 {
    (conjugate * (2.0f64 / 3.0).ln()).exp()
}
