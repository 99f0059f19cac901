//! Exact triadic geometry of the middle-third Cantor construction.
//!
//! Generation-`k` intervals `I_j^k` are indexed left to right by
//! `1 <= j <= 2^k`. The binary digits of `j - 1` (most significant first)
//! pick the left (`0`) or right (`1`) child at each step, so the left
//! endpoint of `I_j^k` has ternary digits in `{0, 2}` only.
//!
//! Endpoints are stored as integer numerators over `3^scale`; conversion to
//! `f64` happens only at the boundary and is correctly rounded for every
//! supported generation.

use std::fmt;

use crate::error::{Error, Result};

/// Deepest generation handled by the geometry. Gap endpoints live over
/// `3^(k+1)` and `3^33 < 2^53`, so every endpoint and center converts to `f64`
/// with a single rounding.
pub const MAX_GENERATION: u32 = 32;

/// `3^n` as an exact integer.
pub fn pow3(n: u32) -> i128 {
    3i128.pow(n)
}

/// Position `(k, j)` in the Cantor tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TriadicIndex {
    k: u32,
    j: u64,
}

impl TriadicIndex {
    pub fn new(k: u32, j: u64) -> Result<Self> {
        if k > MAX_GENERATION || j == 0 || j > (1u64 << k) {
            return Err(Error::InvalidIndex { k, j });
        }
        Ok(Self { k, j })
    }

    pub const fn root() -> Self {
        Self { k: 0, j: 1 }
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn j(&self) -> u64 {
        self.j
    }

    /// Number of intervals in generation `k`.
    pub fn count(k: u32) -> u64 {
        1u64 << k
    }

    /// All indices of generation `k`, left to right.
    pub fn generation(k: u32) -> impl Iterator<Item = TriadicIndex> {
        (1..=Self::count(k)).map(move |j| TriadicIndex { k, j })
    }

    pub fn parent(&self) -> Option<Self> {
        (self.k > 0).then(|| Self {
            k: self.k - 1,
            j: self.j.div_ceil(2),
        })
    }

    /// The other child of the same parent.
    pub fn sibling(&self) -> Result<Self> {
        if self.k == 0 {
            return Err(Error::NoSibling);
        }
        let j = if self.j % 2 == 1 { self.j + 1 } else { self.j - 1 };
        Ok(Self { k: self.k, j })
    }

    pub fn children(&self) -> Result<[Self; 2]> {
        if self.k >= MAX_GENERATION {
            return Err(Error::InvalidIndex {
                k: self.k + 1,
                j: 2 * self.j,
            });
        }
        let k = self.k + 1;
        Ok([Self { k, j: 2 * self.j - 1 }, Self { k, j: 2 * self.j }])
    }

    /// Generation-`k` ancestor; `self` when `k` equals the own generation.
    pub fn ancestor(&self, k: u32) -> Option<Self> {
        (k <= self.k).then(|| Self {
            k,
            j: ((self.j - 1) >> (self.k - k)) + 1,
        })
    }

    pub fn is_descendant_of(&self, other: &Self) -> bool {
        self.ancestor(other.k) == Some(*other)
    }

    /// Image under `x -> 1 - x`.
    pub fn mirror(&self) -> Self {
        Self {
            k: self.k,
            j: Self::count(self.k) + 1 - self.j,
        }
    }

    /// Left endpoint numerator over `3^k`.
    pub fn left_numerator(&self) -> i128 {
        let bits = self.j - 1;
        (0..self.k)
            .rev()
            .fold(0i128, |acc, i| acc * 3 + 2 * ((bits >> i) & 1) as i128)
    }

    /// Breadth-first slot, used to lay trees out in flat vectors.
    pub fn flat(&self) -> usize {
        ((1usize << self.k) - 1) + (self.j as usize - 1)
    }
}

impl fmt::Display for TriadicIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.k, self.j)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Boundary {
    Closed,
    Open,
}

/// An interval with endpoints `left / 3^scale` and `right / 3^scale`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Interval {
    left: i128,
    right: i128,
    scale: u32,
    boundary: Boundary,
}

impl Interval {
    pub fn new(left: i128, right: i128, scale: u32, boundary: Boundary) -> Result<Self> {
        if left >= right {
            return Err(Error::InvalidParameter(format!(
                "interval endpoints out of order: {left} >= {right} (over 3^{scale})"
            )));
        }
        if scale > MAX_GENERATION + 1 {
            return Err(Error::ResourceLimit {
                what: "interval scale",
                requested: scale as u64,
                limit: (MAX_GENERATION + 1) as u64,
            });
        }
        Ok(Self {
            left,
            right,
            scale,
            boundary,
        })
    }

    /// `[0, 1]`.
    pub fn unit() -> Self {
        Self {
            left: 0,
            right: 1,
            scale: 0,
            boundary: Boundary::Closed,
        }
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn scale(&self) -> u32 {
        self.scale
    }

    /// Endpoint numerators over `3^scale`.
    pub fn numerators(&self) -> (i128, i128) {
        (self.left, self.right)
    }

    fn real(self, num: i128) -> f64 {
        num as f64 / pow3(self.scale) as f64
    }

    pub fn left(&self) -> f64 {
        self.real(self.left)
    }

    pub fn right(&self) -> f64 {
        self.real(self.right)
    }

    pub fn length(&self) -> f64 {
        self.real(self.right - self.left)
    }

    pub fn center(&self) -> f64 {
        (self.left + self.right) as f64 / (2 * pow3(self.scale)) as f64
    }

    pub fn contains(&self, x: f64) -> bool {
        match self.boundary {
            Boundary::Closed => self.left() <= x && x <= self.right(),
            Boundary::Open => self.left() < x && x < self.right(),
        }
    }

    /// Distance from `x` to the closure of the interval.
    pub fn dist(&self, x: f64) -> f64 {
        let (a, b) = (self.left(), self.right());
        if x < a {
            a - x
        } else if x > b {
            x - b
        } else {
            0.0
        }
    }

    /// A lower bound on the exact distance from `x` to the interval,
    /// covering the roundings in the endpoint conversion and subtraction.
    pub fn dist_lower(&self, x: f64) -> f64 {
        let (a, b) = (self.left(), self.right());
        let (d, edge) = if x < a {
            (a - x, a)
        } else if x > b {
            (x - b, b)
        } else {
            return 0.0;
        };
        (d - 2.0 * f64::EPSILON * x.abs().max(edge.abs())).max(0.0)
    }

    pub fn closure(&self) -> Self {
        Self {
            boundary: Boundary::Closed,
            ..*self
        }
    }

    /// Concentric interval of triple length.
    pub fn triple(&self) -> Self {
        let len = self.right - self.left;
        Self {
            left: self.left - len,
            right: self.right + len,
            ..*self
        }
    }

    /// Image under `x -> 1 - x`.
    pub fn mirror(&self) -> Self {
        let one = pow3(self.scale);
        Self {
            left: one - self.right,
            right: one - self.left,
            ..*self
        }
    }

    /// The Cantor tree index when this is exactly a closed interval `I_j^k`.
    pub fn cantor_index(&self) -> Option<TriadicIndex> {
        if self.boundary != Boundary::Closed {
            return None;
        }
        // Reduce to lowest terms in the power of three.
        let (mut left, mut right, mut scale) = (self.left, self.right, self.scale);
        while scale > 0 && left % 3 == 0 && right % 3 == 0 {
            left /= 3;
            right /= 3;
            scale -= 1;
        }
        if right - left != 1 || left < 0 || right > pow3(scale) {
            return None;
        }
        let mut bits = 0u64;
        let mut rest = left;
        for i in 0..scale {
            let digit = rest % 3;
            rest /= 3;
            match digit {
                0 => {}
                2 => bits |= 1 << i,
                _ => return None,
            }
        }
        TriadicIndex::new(scale, bits + 1).ok()
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (open, close) = match self.boundary {
            Boundary::Closed => ('[', ']'),
            Boundary::Open => ('(', ')'),
        };
        write!(
            f,
            "{open}{}/3^{}, {}/3^{}{close}",
            self.left, self.scale, self.right, self.scale
        )
    }
}

/// The closed Cantor interval `I_j^k`.
pub fn interval(idx: TriadicIndex) -> Interval {
    let left = idx.left_numerator();
    Interval {
        left,
        right: left + 1,
        scale: idx.k(),
        boundary: Boundary::Closed,
    }
}

/// The open middle third removed from `I_j^k`.
pub fn gap(idx: TriadicIndex) -> Interval {
    let left = 3 * idx.left_numerator();
    Interval {
        left: left + 1,
        right: left + 2,
        scale: idx.k() + 1,
        boundary: Boundary::Open,
    }
}

/// The other Cantor child of the same parent.
pub fn sibling(idx: TriadicIndex) -> Result<TriadicIndex> {
    idx.sibling()
}
