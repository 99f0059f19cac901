use std::io::{BufRead, Write};

use crate::cantor::{gap, TriadicIndex};
use crate::error::{Error, Result};
use crate::par;
use crate::transform::{CauchyField, OmegaField};

/// Deepest gap generation a table may cover.
pub const MAX_ZERO_GENERATION: u32 = 20;
/// A zero closer than this fraction of the gap length to an edge is rejected.
pub const EDGE_CLEARANCE: f64 = 1e-6;
const INITIAL_OFFSET: f64 = 1e-3;
const SMALLEST_OFFSET: f64 = 1e-12;
const RESIDUAL_FLOOR: f64 = 1e-10;
const MAX_ITERATIONS: usize = 200;

/// Quadrature depth used for a table of gaps up to `max_generation` when the
/// caller asks for `depth`: at least eight generations below the deepest gap.
pub fn zero_table_depth(max_generation: u32, depth: u32) -> u32 {
    depth.max(max_generation + 8)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZeroEntry {
    pub z: f64,
    /// `|Hω_N(z)|`.
    pub residual: f64,
    /// Quadrature depth N.
    pub depth: u32,
}

/// Zero of Hω_N in `gap(idx)`, located to `tol·|gap|`. Returns `(z, residual)`.
pub fn find_zero(idx: TriadicIndex, tol: f64, depth: u32) -> Result<(f64, f64)> {
    let field = OmegaField::new(depth)?;
    locate(&field, idx, tol).map(|e| (e.z, e.residual))
}

fn locate(field: &OmegaField, idx: TriadicIndex, tol: f64) -> Result<ZeroEntry> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "zero tolerance {tol} must lie in (0, 1)"
        )));
    }
    if field.depth() <= idx.k() {
        return Err(Error::InvalidParameter(format!(
            "quadrature depth {} does not resolve gap {idx}",
            field.depth()
        )));
    }
    let g = gap(idx);
    let (lo, hi, len) = (g.left(), g.right(), g.length());
    let eval = |x: f64| field.hilbert(x).map(|v| v.value);

    let mut offset = INITIAL_OFFSET;
    let (mut a, mut b, mut fa, mut fb);
    loop {
        a = lo + offset * len;
        b = hi - offset * len;
        fa = eval(a)?;
        fb = eval(b)?;
        if fa <= 0.0 && fb >= 0.0 {
            break;
        }
        offset *= 1e-2;
        if offset < SMALLEST_OFFSET {
            return Err(Error::NumericalFailure(format!(
                "no sign change of Hω in gap {idx} at depth {}",
                field.depth()
            )));
        }
    }

    // Brent's method; `b` is the best iterate and `[b, c]` keeps the sign change.
    let width = |x: f64| (tol * len).max(4.0 * f64::EPSILON * x.abs());
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    let mut iterations = 0;
    loop {
        if (fb > 0.0 && fc > 0.0) || (fb < 0.0 && fc < 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 0.5 * width(b);
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            break;
        }
        iterations += 1;
        if iterations > MAX_ITERATIONS {
            return Err(Error::NumericalFailure(format!(
                "zero search in gap {idx} did not converge"
            )));
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * xm * q - (tol1 * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = eval(b)?;
    }

    let mut z = b;
    let mut fz = fb;
    if fb != 0.0 && fb != fc {
        let s = b - fb * (b - c) / (fb - fc);
        if s > b.min(c) && s < b.max(c) {
            let fs = eval(s)?;
            if fs.abs() < fz.abs() {
                z = s;
                fz = fs;
            }
        }
    }

    accept(field, idx, z, fz)
}

/// Checks that `z` is a usable zero of `field` in `gap(idx)`, given `fz = Hω_N(z)`.
fn accept(field: &OmegaField, idx: TriadicIndex, z: f64, fz: f64) -> Result<ZeroEntry> {
    let g = gap(idx);
    let clearance = (z - g.left()).min(g.right() - z);
    if clearance < EDGE_CLEARANCE * g.length() {
        return Err(Error::NumericalFailure(format!(
            "zero of gap {idx} sits {clearance:e} from the gap edge"
        )));
    }
    let residual = fz.abs();
    let bound = field.hilbert(z)?.error_bound;
    if residual > RESIDUAL_FLOOR.max(2.0 * bound) {
        return Err(Error::NumericalFailure(format!(
            "residual {residual:e} at the zero of gap {idx} exceeds tolerance"
        )));
    }
    Ok(ZeroEntry {
        z,
        residual,
        depth: field.depth(),
    })
}

/// Zeros of Hω_N in every gap of generation at most `max_generation`.
#[derive(Clone, Debug, PartialEq)]
pub struct ZeroTable {
    max_generation: u32,
    /// Breadth-first by gap index.
    entries: Vec<ZeroEntry>,
}

impl ZeroTable {
    pub fn max_generation(&self) -> u32 {
        self.max_generation
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, idx: TriadicIndex) -> Option<&ZeroEntry> {
        if idx.k() > self.max_generation {
            return None;
        }
        self.entries.get(idx.flat())
    }

    pub fn iter(&self) -> impl Iterator<Item = (TriadicIndex, &ZeroEntry)> {
        (0..=self.max_generation)
            .flat_map(TriadicIndex::generation)
            .zip(self.entries.iter())
    }

    /// The entries of generations up to `k`.
    pub fn truncated(&self, k: u32) -> Option<ZeroTable> {
        if k > self.max_generation {
            return None;
        }
        Some(ZeroTable {
            max_generation: k,
            entries: self.entries[..(1usize << (k + 1)) - 1].to_vec(),
        })
    }

    /// Whether every gap up to generation `k` is present.
    /// Re-evaluates every tabulated zero at its recorded depth and applies the
    /// acceptance rules of the zero search. For tables read from disk.
    pub fn verify(&self) -> Result<()> {
        let mut depths: Vec<u32> = self.entries.iter().map(|e| e.depth).collect();
        depths.sort_unstable();
        depths.dedup();
        for depth in depths {
            let field = OmegaField::new(depth)?;
            let indices: Vec<(TriadicIndex, ZeroEntry)> = self
                .iter()
                .filter(|(_, e)| e.depth == depth)
                .map(|(i, e)| (i, *e))
                .collect();
            par::try_map(&indices, |&(idx, e)| {
                if depth <= idx.k() {
                    return Err(Error::InvalidParameter(format!(
                        "depth {depth} recorded for gap {idx} does not resolve it"
                    )));
                }
                accept(&field, idx, e.z, field.hilbert(e.z)?.value)
            })?;
        }
        Ok(())
    }

    pub fn covers(&self, k: u32) -> bool {
        k <= self.max_generation
    }

    /// Smallest distance from a zero to its gap edge, relative to the gap
    /// length, per generation.
    pub fn edge_clearance(&self) -> Vec<f64> {
        let mut out = vec![f64::INFINITY; self.max_generation as usize + 1];
        for (idx, e) in self.iter() {
            let g = gap(idx);
            let c = (e.z - g.left()).min(g.right() - e.z) / g.length();
            let slot = &mut out[idx.k() as usize];
            *slot = slot.min(c);
        }
        out
    }

    /// CSV with header `k,j,z,residual,depth`, reals to 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "k,j,z,residual,depth")?;
        for (idx, e) in self.iter() {
            writeln!(
                out,
                "{},{},{:.16e},{:.16e},{}",
                idx.k(),
                idx.j(),
                e.z,
                e.residual,
                e.depth
            )?;
        }
        Ok(())
    }

    /// Reads a table written by [`write_csv`](Self::write_csv). The file must
    /// list every gap up to its deepest generation exactly once.
    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut rows = Vec::new();
        for (n, line) in input.lines().enumerate() {
            let line = line?;
            let lineno = n + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if n == 0 {
                if line != "k,j,z,residual,depth" {
                    return Err(parse_error(lineno, "expected header k,j,z,residual,depth"));
                }
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 {
                return Err(parse_error(lineno, "expected five fields"));
            }
            let bad = |what: &str| parse_error(lineno, &format!("invalid {what}"));
            let k: u32 = fields[0].trim().parse().map_err(|_| bad("k"))?;
            let j: u64 = fields[1].trim().parse().map_err(|_| bad("j"))?;
            let z: f64 = fields[2].trim().parse().map_err(|_| bad("z"))?;
            let residual: f64 = fields[3].trim().parse().map_err(|_| bad("residual"))?;
            let depth: u32 = fields[4].trim().parse().map_err(|_| bad("depth"))?;
            let idx = TriadicIndex::new(k, j).map_err(|_| bad("gap index"))?;
            if !gap(idx).contains(z) {
                return Err(parse_error(lineno, &format!("z = {z} lies outside gap {idx}")));
            }
            rows.push((idx, ZeroEntry { z, residual, depth }));
        }
        let Some(max_generation) = rows.iter().map(|(i, _)| i.k()).max() else {
            return Err(parse_error(1, "zero table is empty"));
        };
        if max_generation > MAX_ZERO_GENERATION {
            return Err(Error::ResourceLimit {
                what: "zero table generation",
                requested: max_generation as u64,
                limit: MAX_ZERO_GENERATION as u64,
            });
        }
        let size = (1usize << (max_generation + 1)) - 1;
        let mut slots: Vec<Option<ZeroEntry>> = vec![None; size];
        for (idx, entry) in rows {
            if slots[idx.flat()].replace(entry).is_some() {
                return Err(parse_error(0, &format!("gap {idx} listed twice")));
            }
        }
        let entries = slots
            .into_iter()
            .enumerate()
            .map(|(i, e)| e.ok_or_else(|| parse_error(0, &format!("missing gap in slot {i}"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            max_generation,
            entries,
        })
    }
}

fn parse_error(line: usize, message: &str) -> Error {
    Error::Parse {
        line,
        message: message.to_string(),
    }
}

/// Zeros of Hω_N for all gaps with `k <= max_generation`.
pub fn zero_table(max_generation: u32, tol: f64, depth: u32) -> Result<ZeroTable> {
    if max_generation > MAX_ZERO_GENERATION {
        return Err(Error::ResourceLimit {
            what: "zero table generation",
            requested: max_generation as u64,
            limit: MAX_ZERO_GENERATION as u64,
        });
    }
    let field = OmegaField::new(depth)?;
    let indices: Vec<TriadicIndex> = (0..=max_generation).flat_map(TriadicIndex::generation).collect();
    let entries = par::try_map(&indices, |&idx| locate(&field, idx, tol))?;
    Ok(ZeroTable {
        max_generation,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cantor::cantor_quadrature;
    use crate::transform::cauchy_sum;

    const TOL: f64 = 1e-12;

    fn idx(k: u32, j: u64) -> TriadicIndex {
        TriadicIndex::new(k, j).unwrap()
    }

    #[test]
    fn central_zero() {
        let (z, r) = find_zero(TriadicIndex::root(), TOL, 12).unwrap();
        assert!((z - 0.5).abs() <= TOL / 3.0);
        assert!(r <= 1e-12);
    }

    #[test]
    fn first_generation_zeros_are_mirror_images() {
        let (z1, _) = find_zero(idx(1, 1), TOL, 16).unwrap();
        let (z2, _) = find_zero(idx(1, 2), TOL, 16).unwrap();
        assert!(z1 > 1.0 / 9.0 && z1 < 2.0 / 9.0);
        assert!((z1 + z2 - 1.0).abs() <= 2.0 * TOL / 9.0);
    }

    #[test]
    fn zero_is_a_sign_change_of_the_brute_force_sum() {
        let q = cantor_quadrature(12).unwrap();
        let i = idx(2, 3);
        let (z, _) = find_zero(i, TOL, 12).unwrap();
        let w = TOL * gap(i).length();
        assert!(cauchy_sum(&q, z - w).unwrap() < 0.0);
        assert!(cauchy_sum(&q, z + w).unwrap() > 0.0);
    }

    #[test]
    fn small_tables() {
        let t0 = zero_table(0, TOL, 8).unwrap();
        assert_eq!(t0.len(), 1);
        assert!((t0.get(TriadicIndex::root()).unwrap().z - 0.5).abs() < 1e-12);
        let t2 = zero_table(2, TOL, 10).unwrap();
        assert_eq!(t2.len(), 7);
        for (i, e) in t2.iter() {
            assert!(gap(i).contains(e.z));
            assert_eq!(e.depth, 10);
        }
        assert!(t2.get(idx(3, 1)).is_none());
        let t1 = t2.truncated(1).unwrap();
        assert_eq!(t1.len(), 3);
        assert_eq!(t1.get(idx(1, 2)), t2.get(idx(1, 2)));
        assert!(t2.truncated(3).is_none());
    }

    #[test]
    fn table_mirror_symmetry() {
        let t = zero_table(5, TOL, 13).unwrap();
        for (i, e) in t.iter() {
            let m = t.get(i.mirror()).unwrap();
            assert!((e.z + m.z - 1.0).abs() <= 2.0 * TOL * gap(i).length().max(f64::EPSILON));
        }
    }

    #[test]
    fn monotone_inside_gaps() {
        let field = OmegaField::new(12).unwrap();
        for k in 0..=4 {
            for i in TriadicIndex::generation(k) {
                let g = gap(i);
                let values: Vec<f64> = (1..=10)
                    .map(|n| {
                        let x = g.left() + n as f64 / 11.0 * g.length();
                        field.hilbert(x).unwrap().value
                    })
                    .collect();
                assert!(values.windows(2).all(|w| w[0] < w[1]), "gap {i}");
            }
        }
    }

    #[test]
    fn shallow_depth_is_rejected() {
        assert!(find_zero(idx(3, 1), TOL, 3).is_err());
        assert!(find_zero(idx(3, 1), 0.0, 8).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let t = zero_table(3, TOL, 11).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("k,j,z,residual,depth\n0,1,5.0000000000000000e-1,"));
        let back = ZeroTable::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, t);
        back.verify().unwrap();
    }

    #[test]
    fn verification_catches_displaced_zeros() {
        let t = zero_table(1, TOL, 9).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap().replace(
            &format!("{:.16e}", t.get(TriadicIndex::new(1, 1).unwrap()).unwrap().z),
            "1.6e-1",
        );
        let bent = ZeroTable::read_csv(text.as_bytes()).unwrap();
        assert!(matches!(bent.verify(), Err(Error::NumericalFailure(_))));
    }

    #[test]
    fn csv_rejects_incomplete_or_misplaced_rows() {
        let missing = "k,j,z,residual,depth\n0,1,0.5,0,8\n1,1,0.15,0,8\n";
        assert!(ZeroTable::read_csv(missing.as_bytes()).is_err());
        let outside = "k,j,z,residual,depth\n0,1,0.2,0,8\n";
        assert!(ZeroTable::read_csv(outside.as_bytes()).is_err());
        let header = "k,j,z\n0,1,0.5\n";
        assert!(ZeroTable::read_csv(header.as_bytes()).is_err());
    }
}
