//! Cauchy sums over measures carried by the Cantor tree.
//!
//! Every atom of ω_N and σ_L belongs to a node of the triadic tree (the
//! deepest Cantor interval containing it), so a Cauchy sum can be organised
//! by nodes: a node well separated from the evaluation point contributes
//! through a truncated moment expansion of `1/(y - x)` about its center, and
//! only nodes near the point are opened. The truncation error of every
//! expansion is bounded and reported, so the result is the brute-force sum to
//! within a stated tolerance (below 1e-17 relative per node).
//!
//! [`OmegaField`] uses the closed-form self-similar moments of ω_N and needs
//! no atoms at all. [`ClusterField`] accumulates moments from an arbitrary
//! tree-indexed [`AtomicMeasure`].

use crate::cantor::{interval, pow3, AtomicMeasure, TriadicIndex, MAX_GENERATION};
use crate::error::{Error, Result};
use crate::sum::NeumaierSum;

/// Highest moment kept in a node expansion.
pub const EXPANSION_ORDER: usize = 24;
const MOMENTS: usize = EXPANSION_ORDER + 1;
/// A node of half-length `h` is expanded when `|c - x| >= FAR_FACTOR * (h + slack)`.
const FAR_FACTOR: f64 = 5.0;
/// Relative rounding allowance applied to the magnitude of every term.
const ROUNDING: f64 = 64.0 * f64::EPSILON;

/// Deepest ω quadrature the analytic field accepts.
pub const MAX_FIELD_DEPTH: u32 = 30;
/// Deepest tree a [`ClusterField`] stores moments for.
pub const MAX_CLUSTER_DEPTH: u32 = 18;

/// One evaluation of a Cauchy sum.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FieldSample {
    pub value: f64,
    /// Bound on expansion truncation plus rounding in `value`.
    pub truncation: f64,
    /// Upper bound on `Σ m / dist²`, where each distance is shrunk by the
    /// evaluation slack; multiplied by the slack this bounds how far the sum
    /// can move when either the point or the atoms move by at most the slack.
    pub kernel_sq: f64,
}

/// A Cauchy sum restricted to a Cantor subtree.
pub trait CauchyField: Sync {
    /// Deepest generation carrying mass.
    fn depth(&self) -> u32;

    /// `Σ m/(y - x)` over the atoms inside the closed Cantor interval `root`.
    ///
    /// `slack` is the displacement radius used for `kernel_sq`; an atom within
    /// `slack` of `x` is an error.
    fn evaluate(&self, root: TriadicIndex, x: f64, slack: f64) -> Result<FieldSample>;
}

#[inline]
fn half_length(k: u32) -> f64 {
    0.5 / pow3(k) as f64
}

#[inline]
fn center(k: u32, left: i128) -> f64 {
    (2 * left + 1) as f64 / (2 * pow3(k)) as f64
}

#[derive(Default)]
struct Accumulator {
    value: NeumaierSum,
    magnitude: f64,
    truncation: f64,
    kernel_sq: f64,
}

impl Accumulator {
    fn direct(&mut self, position: f64, mass: f64, x: f64, slack: f64) -> Result<()> {
        let d = position - x;
        let clearance = d.abs() - slack - 2.0 * f64::EPSILON * x.abs().max(position.abs());
        if clearance <= 0.0 || d == 0.0 {
            return Err(if slack == 0.0 {
                Error::Singularity { x, position }
            } else {
                Error::TooClose { x, position, slack }
            });
        }
        let term = mass / d;
        self.value += term;
        self.magnitude += term.abs();
        self.kernel_sq += mass / (clearance * clearance);
        Ok(())
    }

    /// Adds the expansion `mass/d Σ_q ν_q (-h/d)^q` of a far node.
    /// `series` is the already evaluated moment polynomial.
    fn far(&mut self, d: f64, h: f64, slack: f64, mass: f64, series: f64) {
        let ad = d.abs();
        let rho = h / ad;
        let bound = mass / (ad * (1.0 - rho));
        let term = series / d;
        self.value += term;
        self.magnitude += bound;
        self.truncation += bound * rho.powi(MOMENTS as i32);
        let clearance = ad - h - slack;
        self.kernel_sq += mass / (clearance * clearance);
    }

    fn finish(self) -> FieldSample {
        FieldSample {
            value: self.value.value(),
            truncation: self.truncation + ROUNDING * self.magnitude,
            kernel_sq: self.kernel_sq * (1.0 + ROUNDING),
        }
    }
}

#[inline]
fn is_far(d: f64, h: f64, slack: f64) -> bool {
    d.abs() >= FAR_FACTOR * (h + slack)
}

/// The Cauchy field of the depth-N Cantor quadrature, from exact moments.
#[derive(Clone, Debug)]
pub struct OmegaField {
    depth: u32,
    /// `even[n][i] = E[T^{2i}]` for the node set of ω_n rescaled to `[-1, 1]`.
    even: Vec<[f64; MOMENTS / 2 + 1]>,
}

impl OmegaField {
    pub fn new(depth: u32) -> Result<Self> {
        if depth > MAX_FIELD_DEPTH {
            return Err(Error::ResourceLimit {
                what: "omega field depth",
                requested: depth as u64,
                limit: MAX_FIELD_DEPTH as u64,
            });
        }
        let binom = binomials();
        let mut full = vec![[0.0; MOMENTS]; depth as usize + 1];
        full[0][0] = 1.0;
        for n in 1..=depth as usize {
            for q in 0..MOMENTS {
                let mut acc = 0.0;
                for r in 0..=q {
                    if (q - r) % 2 == 1 {
                        continue;
                    }
                    acc += binom[q][r] * 3f64.powi(-(r as i32)) * full[n - 1][r] * (2.0f64 / 3.0).powi((q - r) as i32);
                }
                full[n][q] = acc;
            }
        }
        let even = full
            .iter()
            .map(|m| {
                let mut e = [0.0; MOMENTS / 2 + 1];
                for (i, slot) in e.iter_mut().enumerate() {
                    if 2 * i < MOMENTS {
                        *slot = m[2 * i];
                    }
                }
                e
            })
            .collect();
        Ok(Self { depth, even })
    }

    /// Half-length of the depth-N cylinders.
    pub fn cell_half_length(&self) -> f64 {
        half_length(self.depth)
    }

    /// Normalised moments `E[T^q]`, `q <= EXPANSION_ORDER`, of ω_n on `[-1, 1]`.
    pub fn moment(&self, remaining: u32, q: usize) -> f64 {
        if q % 2 == 1 {
            0.0
        } else {
            self.even[remaining as usize][q / 2]
        }
    }
}

impl CauchyField for OmegaField {
    fn depth(&self) -> u32 {
        self.depth
    }

    fn evaluate(&self, root: TriadicIndex, x: f64, slack: f64) -> Result<FieldSample> {
        let mut acc = Accumulator::default();
        if root.k() > self.depth {
            return Ok(acc.finish());
        }
        let mut stack: Vec<(u32, i128)> = Vec::with_capacity(2 * self.depth as usize + 4);
        stack.push((root.k(), root.left_numerator()));
        while let Some((k, left)) = stack.pop() {
            let c = center(k, left);
            let mass = (-(k as f64)).exp2();
            if k == self.depth {
                acc.direct(c, mass, x, slack)?;
                continue;
            }
            let h = half_length(k);
            let d = c - x;
            if is_far(d, h, slack) {
                let t2 = (h / d) * (h / d);
                let moments = &self.even[(self.depth - k) as usize];
                let series = moments.iter().rev().fold(0.0, |s, &m| s * t2 + m);
                acc.far(d, h, slack, mass, mass * series);
            } else {
                stack.push((k + 1, 3 * left + 2));
                stack.push((k + 1, 3 * left));
            }
        }
        Ok(acc.finish())
    }
}

/// Moment tree of a tree-indexed atomic measure.
#[derive(Clone, Debug)]
pub struct ClusterField {
    depth: u32,
    /// `MOMENTS` normalised moments per node, breadth-first.
    moments: Vec<f64>,
    /// Atoms owned by each node (CSR layout).
    own_start: Vec<u32>,
    own: Vec<(f64, f64)>,
}

impl ClusterField {
    /// Every atom must carry its tree index and lie in that Cantor interval.
    pub fn new(mu: &AtomicMeasure) -> Result<Self> {
        let depth = mu.max_generation().unwrap_or(0);
        if depth > MAX_CLUSTER_DEPTH {
            return Err(Error::ResourceLimit {
                what: "cluster tree depth",
                requested: depth as u64,
                limit: MAX_CLUSTER_DEPTH as u64,
            });
        }
        let nodes = (1usize << (depth + 1)) - 1;
        let mut moments = vec![NeumaierSum::new(); nodes * MOMENTS];
        let mut counts = vec![0u32; nodes + 1];
        let mut placed = Vec::with_capacity(mu.len());
        for atom in mu.atoms() {
            let idx = atom
                .index
                .ok_or_else(|| Error::InvalidParameter(format!("atom at {} has no tree index", atom.position)))?;
            if !interval(idx).contains(atom.position) {
                return Err(Error::InvalidParameter(format!(
                    "atom at {} lies outside its interval {idx}",
                    atom.position
                )));
            }
            counts[idx.flat() + 1] += 1;
            placed.push((idx, atom.position, atom.mass));
            for k in (0..=idx.k()).rev() {
                let node = idx.ancestor(k).expect("ancestor within generation");
                let c = center(k, node.left_numerator());
                let t = (atom.position - c) / half_length(k);
                let range = node.flat() * MOMENTS..(node.flat() + 1) * MOMENTS;
                let mut power = atom.mass;
                for m in &mut moments[range] {
                    *m += power;
                    power *= t;
                }
            }
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let mut cursor = counts.clone();
        let mut own = vec![(0.0, 0.0); placed.len()];
        for (idx, position, mass) in placed {
            let slot = &mut cursor[idx.flat()];
            own[*slot as usize] = (position, mass);
            *slot += 1;
        }
        Ok(Self {
            depth,
            moments: moments.iter().map(NeumaierSum::value).collect(),
            own_start: counts,
            own,
        })
    }

    fn node_moments(&self, idx: TriadicIndex) -> &[f64] {
        &self.moments[idx.flat() * MOMENTS..(idx.flat() + 1) * MOMENTS]
    }

    /// Total mass inside the Cantor interval `idx`.
    pub fn mass(&self, idx: TriadicIndex) -> f64 {
        if idx.k() > self.depth {
            0.0
        } else {
            self.node_moments(idx)[0]
        }
    }
}

impl CauchyField for ClusterField {
    fn depth(&self) -> u32 {
        self.depth
    }

    fn evaluate(&self, root: TriadicIndex, x: f64, slack: f64) -> Result<FieldSample> {
        let mut acc = Accumulator::default();
        if root.k() > self.depth {
            return Ok(acc.finish());
        }
        let mut stack: Vec<(TriadicIndex, i128)> = Vec::with_capacity(2 * self.depth as usize + 4);
        stack.push((root, root.left_numerator()));
        while let Some((idx, left)) = stack.pop() {
            let k = idx.k();
            let moments = self.node_moments(idx);
            let mass = moments[0];
            if mass == 0.0 {
                continue;
            }
            let c = center(k, left);
            let h = half_length(k);
            let d = c - x;
            if is_far(d, h, slack) {
                let t = -h / d;
                let series = moments.iter().rev().fold(0.0, |s, &m| s * t + m);
                acc.far(d, h, slack, mass, series);
                continue;
            }
            let flat = idx.flat();
            for &(position, m) in &self.own[self.own_start[flat] as usize..self.own_start[flat + 1] as usize] {
                acc.direct(position, m, x, slack)?;
            }
            if k < self.depth && k < MAX_GENERATION {
                let [l, r] = idx.children()?;
                stack.push((r, 3 * left + 2));
                stack.push((l, 3 * left));
            }
        }
        Ok(acc.finish())
    }
}

fn binomials() -> Vec<Vec<f64>> {
    let mut rows = vec![vec![1.0]];
    for n in 1..MOMENTS {
        let prev = &rows[n - 1];
        let mut row = vec![1.0; n + 1];
        for r in 1..n {
            row[r] = prev[r - 1] + prev[r];
        }
        rows.push(row);
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cantor::{cantor_quadrature, gap, sigma_truncated, Variant};
    use crate::config::ExponentConfig;
    use crate::transform::cauchy_sum;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn omega_moments_match_node_sets() {
        let field = OmegaField::new(8).unwrap();
        for n in 0..=8 {
            let q = cantor_quadrature(n).unwrap();
            for order in [0usize, 1, 2, 4, 7, 10] {
                let direct: f64 = q
                    .atoms()
                    .iter()
                    .map(|a| a.mass * (2.0 * (a.position - 0.5)).powi(order as i32))
                    .sum();
                assert!(close(field.moment(n, order), direct, 1e-14), "n={n} q={order}");
            }
        }
    }

    #[test]
    fn omega_field_matches_brute_force() {
        for depth in [0, 1, 3, 6, 10, 12] {
            let field = OmegaField::new(depth).unwrap();
            let q = cantor_quadrature(depth).unwrap();
            let mut points = vec![-0.7, 1.3, 2.0, 0.4, 0.23];
            if depth > 0 {
                points.push(0.5);
            }
            for k in 0..depth.min(4) {
                for idx in TriadicIndex::generation(k) {
                    let g = gap(idx);
                    points.push(g.left() + 0.37 * g.length());
                }
            }
            for x in points {
                let brute = cauchy_sum(&q, x).unwrap();
                let s = field.evaluate(TriadicIndex::root(), x, 0.0).unwrap();
                let tol = s.truncation + 1e-13 * brute.abs().max(1.0);
                assert!(
                    close(s.value, brute, tol),
                    "depth={depth} x={x}: {} vs {brute}",
                    s.value
                );
                assert!(s.truncation < 1e-12 * (1.0 + brute.abs()));
            }
        }
    }

    #[test]
    fn restricted_roots_sum_to_the_whole() {
        let field = OmegaField::new(9).unwrap();
        let x = 0.61;
        let whole = field.evaluate(TriadicIndex::root(), x, 0.0).unwrap().value;
        let parts: f64 = TriadicIndex::generation(3)
            .map(|i| field.evaluate(i, x, 0.0).unwrap().value)
            .sum();
        assert!(close(whole, parts, 1e-13));
    }

    #[test]
    fn cluster_field_matches_brute_force() {
        let cfg = ExponentConfig::new(3.0, 1.0).unwrap();
        let s = sigma_truncated(&cfg, 9, Variant::Centered, None).unwrap();
        let field = ClusterField::new(&s).unwrap();
        let m = field.mass(TriadicIndex::root());
        assert!(close(m, s.total_mass(), 1e-14), "{m} vs {}", s.total_mass());
        let q = cantor_quadrature(11).unwrap();
        for a in q.atoms().iter().step_by(97) {
            let brute = cauchy_sum(&s, a.position).unwrap();
            let got = field.evaluate(TriadicIndex::root(), a.position, 0.0).unwrap();
            assert!(close(got.value, brute, got.truncation + 1e-13 * brute.abs()));
            let sub = a.index.unwrap().ancestor(2).unwrap();
            let brute_sub = cauchy_sum(&s.restrict(&interval(sub)), a.position).unwrap();
            let got_sub = field.evaluate(sub, a.position, 0.0).unwrap();
            assert!(close(
                got_sub.value,
                brute_sub,
                got_sub.truncation + 1e-13 * brute_sub.abs()
            ));
        }
    }

    #[test]
    fn kernel_bound_dominates_exact_sum() {
        let cfg = ExponentConfig::new(2.0, 1.0).unwrap();
        let s = sigma_truncated(&cfg, 7, Variant::Centered, None).unwrap();
        let field = ClusterField::new(&s).unwrap();
        let slack = half_length(10);
        for a in cantor_quadrature(10).unwrap().atoms().iter().step_by(31) {
            let exact: f64 = s
                .atoms()
                .iter()
                .map(|b| b.mass / ((b.position - a.position).abs() - slack).powi(2))
                .sum();
            let got = field.evaluate(TriadicIndex::root(), a.position, slack).unwrap();
            assert!(got.kernel_sq >= exact * (1.0 - 1e-12));
        }
    }

    #[test]
    fn collisions_are_reported() {
        let cfg = ExponentConfig::new(2.0, 1.0).unwrap();
        let s = sigma_truncated(&cfg, 2, Variant::Centered, None).unwrap();
        let field = ClusterField::new(&s).unwrap();
        assert!(matches!(
            field.evaluate(TriadicIndex::root(), 0.5, 0.0),
            Err(Error::Singularity { .. })
        ));
        let omega = OmegaField::new(3).unwrap();
        let node = 0.5 / 27.0;
        assert!(matches!(
            omega.evaluate(TriadicIndex::root(), node + 1e-4, omega.cell_half_length()),
            Err(Error::TooClose { .. })
        ));
    }

    #[test]
    fn rejects_unindexed_atoms() {
        let m = AtomicMeasure::new(
            vec![crate::cantor::Atom::new(0.5, 1.0)],
            crate::cantor::Provenance::Custom,
        )
        .unwrap();
        assert!(ClusterField::new(&m).is_err());
    }
}
