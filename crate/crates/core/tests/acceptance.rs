//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use weightlab::cantor::{gap, precursor_ratio, sigma_truncated, sigma_weight, TriadicIndex, Variant};
use weightlab::criteria::{
    ap_constant, ap_family, fit_growth, geometric_cutoffs, quad_lhs_closed, quad_lhs_direct, quad_rhs_closed,
    quad_rhs_closed_series, quad_rhs_direct, selfsim_energy, testing_scan, WeightPair,
};
use weightlab::transform::{find_zero, hilbert_omega, zero_table, zero_table_depth, ZeroTable};
use weightlab::ExponentConfig;

const STABILITY: f64 = 0.05;
const GROWTH: f64 = 0.05;
const RATIO_BAND: f64 = 0.10;

type Check = fn() -> Outcome;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn cfg(p: f64) -> ExponentConfig {
    ExponentConfig::new(p, 1.0).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Half-width of the band around the midpoint of `values`, relative to it.
fn spread(values: &[f64]) -> f64 {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (hi - lo) / (hi + lo)
}

fn central_zero() -> Outcome {
    let start = Instant::now();
    let (z, _) = find_zero(TriadicIndex::root(), 1e-12, 16).unwrap();
    let table = zero_table(8, 1e-12, zero_table_depth(8, 16)).unwrap();
    let mut worst: f64 = 0.0;
    for (idx, e) in table.iter() {
        let m = table.get(idx.mirror()).unwrap();
        worst = worst.max((e.z + m.z - 1.0).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        (z - 0.5).abs() <= 1e-10 && worst <= 1e-9 && secs < 30.0,
        format!(
            "|z(0,1)-1/2| = {:.1e}, mirror defect {worst:.1e} (k <= 8), {secs:.1}s",
            (z - 0.5).abs()
        ),
    )
}

fn mass_identities() -> Outcome {
    let mut worst_mass: f64 = 0.0;
    let mut worst_precursor: f64 = 0.0;
    for p in [1.5, 2.0, 3.0, 4.0] {
        let c = cfg(p);
        let q = p / (p - 1.0);
        let r = (2.0f64 / 3.0).powf(q);
        for l in [5, 10, 20] {
            let total = sigma_truncated(&c, l, Variant::Centered, None).unwrap().total_mass();
            let closed = (1.0 - r.powi(l as i32 + 1)) / (1.0 - r);
            worst_mass = worst_mass.max(rel(total, closed));
        }
        for k in 0..=40 {
            let s = sigma_weight(&c, k).value();
            let direct = s.powf(p - 1.0) * 0.5f64.powi(k as i32) * 3f64.powf(k as f64 * p);
            worst_precursor = worst_precursor
                .max((direct - 1.0).abs())
                .max((precursor_ratio(&c, k) - 1.0).abs());
        }
    }
    outcome(
        worst_mass <= 1e-12 && worst_precursor <= 1e-12,
        format!("mass defect {worst_mass:.1e}, precursor defect {worst_precursor:.1e}"),
    )
}

fn beta(p: f64, k: u32) -> f64 {
    let q = p / (p - 1.0);
    let k = k as f64;
    1.5f64.powf((q - 1.0) * k) / ((k + 1.0).powf(1.0 / p) * (k + 2.0).ln().powf(2.0 / p))
}

/// Expanded sum over (k, j, atom), with membership tested on plain f64 intervals.
fn expanded_lhs(p: f64, n: u32, c: &ExponentConfig) -> f64 {
    let sigma = sigma_truncated(c, n, Variant::Centered, None).unwrap();
    let mut total = 0.0;
    for atom in sigma.atoms() {
        let mut square = 0.0;
        for k in 1..=n {
            for idx in TriadicIndex::generation(k) {
                let theta = weightlab::cantor::interval(idx.sibling().unwrap());
                if theta.left() <= atom.position && atom.position <= theta.right() {
                    square += beta(p, k).powi(2);
                }
            }
        }
        total += atom.mass * square.powf(p / 2.0);
    }
    total
}

fn quadratic_lhs() -> Outcome {
    let mut worst: f64 = 0.0;
    for p in [2.0, 4.0] {
        let c = cfg(p);
        let sigma = sigma_truncated(&c, 6, Variant::Centered, None).unwrap();
        worst = worst.max(rel(quad_lhs_direct(&c, 6, &sigma).unwrap(), expanded_lhs(p, 6, &c)));
    }
    let c = cfg(4.0);
    let sigma = sigma_truncated(&c, 14, Variant::Centered, None).unwrap();
    let partial: Vec<f64> = (1..=14).map(|n| quad_lhs_direct(&c, n, &sigma).unwrap()).collect();
    let increasing = partial.windows(2).all(|w| w[1] > w[0]);
    // Integral test: Σ_{k>=1} 1/((k+1) ln(k+2)^2) < 1/(2 ln 3^2) + 1/ln 3.
    let series_cap = 1.0 / (2.0 * 3f64.ln().powi(2)) + 1.0 / 3f64.ln();
    let closed_bounded = quad_lhs_closed(&c, 10_000_000) < series_cap;
    outcome(
        worst <= 1e-10 && increasing && closed_bounded,
        format!(
            "direct vs expanded {worst:.1e} (N = L = 6), partial sums increasing: {increasing}, closed series below {series_cap:.4}: {closed_bounded}"
        ),
    )
}

fn quadratic_rhs_growth() -> Outcome {
    let start = Instant::now();
    let cutoffs = geometric_cutoffs(1_000, 1_000_000, 7);
    let fit = |c: &ExponentConfig| {
        let values = quad_rhs_closed_series(c, &cutoffs);
        let points: Vec<(f64, f64)> = cutoffs.iter().map(|&n| n as f64).zip(values).collect();
        fit_growth(&points, c).unwrap()
    };
    let cases = [
        ("p=4", fit(&cfg(4.0)), 1.0),
        ("p=2", fit(&cfg(2.0)), 0.0),
        ("dual p=4/3", fit(&cfg(4.0 / 3.0).dual_swap()), 1.0),
    ];
    let secs = start.elapsed().as_secs_f64();
    let pass = cases.iter().all(|(_, f, t)| (f.alpha - t).abs() <= GROWTH) && secs < 10.0;
    let detail: Vec<String> = cases
        .iter()
        .map(|(n, f, t)| format!("{n}: α = {:.4} (target {t})", f.alpha))
        .collect();
    outcome(pass, format!("{}, {secs:.1}s", detail.join(", ")))
}

fn direct_closed_consistency() -> Outcome {
    let c = cfg(4.0);
    let rhs: Vec<f64> = (6..=14)
        .map(|n| {
            let sigma = sigma_truncated(&c, n + 6, Variant::Centered, None).unwrap();
            quad_rhs_direct(&c, n, &sigma).unwrap() / quad_rhs_closed(&c, n as u64)
        })
        .collect();
    let lhs: Vec<f64> = (4..=10)
        .map(|n| {
            let sigma = sigma_truncated(&c, n + 6, Variant::Centered, None).unwrap();
            quad_lhs_direct(&c, n, &sigma).unwrap() / quad_lhs_closed(&c, n as u64)
        })
        .collect();
    let range = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        format!("[{lo:.4}, {hi:.4}]")
    };
    let (sr, sl) = (spread(&rhs), spread(&lhs));
    outcome(
        sr <= RATIO_BAND && sl <= RATIO_BAND,
        format!(
            "rhs ratio {} ±{:.1}% (N 6..14), lhs ratio {} ±{:.1}% (N 4..10)",
            range(&rhs),
            100.0 * sr,
            range(&lhs),
            100.0 * sl
        ),
    )
}

fn scalar_conditions() -> Outcome {
    let table: ZeroTable = zero_table(16, 1e-12, zero_table_depth(16, 16)).unwrap();
    let family = ap_family(6, true);
    let mut pass = true;
    let mut lines = Vec::new();
    for p in [2.0, 4.0] {
        for variant in [Variant::Centered, Variant::Zeroed] {
            let zeros = (variant == Variant::Zeroed).then_some(&table);
            let pair = |n, l| WeightPair::new(cfg(p), n, l, variant, zeros).unwrap();
            let ap = [(14, 14), (16, 16)].map(|(n, l)| ap_constant(&pair(n, l), &family).unwrap().sup());
            let tests = [(14, 12), (16, 14)].map(|(n, l)| testing_scan(&pair(n, l), 6).unwrap());
            let fwd = [tests[0].forward.sup(), tests[1].forward.sup()];
            let bwd = [tests[0].backward.sup(), tests[1].backward.sup()];
            let mut case = format!("p={p} {}:", variant.as_str());
            for (name, v) in [("A_p", ap), ("forward", fwd), ("backward", bwd)] {
                let change = rel(v[1], v[0]);
                let ok = change < STABILITY;
                pass &= ok;
                case.push_str(&format!(
                    " {name} {:.4}->{:.4} ({:.1}%{})",
                    v[0],
                    v[1],
                    100.0 * change,
                    if ok { "" } else { " FAIL" }
                ));
            }
            lines.push(case);
        }
    }
    outcome(pass, lines.join("; "))
}

fn bound_soundness() -> Outcome {
    let n = 10;
    let mut state = 0x9e37_79b9_7f4a_7c15u64;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let k = (next() * 8.0) as u32;
        let j = 1 + (next() * (1u64 << k) as f64) as u64;
        let g = gap(TriadicIndex::new(k, j).unwrap());
        let x = g.left() + (0.01 + 0.98 * next()) * g.length();
        let coarse = hilbert_omega(x, n).unwrap();
        let fine = hilbert_omega(x, n + 4).unwrap();
        let diff = (coarse.value - fine.value).abs();
        worst = worst.max(diff / coarse.error_bound);
        if diff > coarse.error_bound {
            violations += 1;
        }
    }
    let mut residual_violations = 0;
    for k in 0..=6 {
        for idx in TriadicIndex::generation(k) {
            let (z, r) = find_zero(idx, 1e-12, 14).unwrap();
            let (_, r_fine) = find_zero(idx, 1e-12, 18).unwrap();
            let bound = hilbert_omega(z, 14).unwrap().error_bound;
            if r_fine > r + bound {
                residual_violations += 1;
            }
        }
    }
    outcome(
        violations == 0 && residual_violations == 0,
        format!(
            "{violations}/1000 bound violations (largest |ΔH|/bound {worst:.3}), {residual_violations} residual-decay violations over k <= 6"
        ),
    )
}

fn selfsim_stability() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for p in [2.0, 4.0] {
        let a = selfsim_energy(&cfg(p), 10, 14).unwrap();
        let b = selfsim_energy(&cfg(p), 12, 16).unwrap();
        let change = rel(b, a);
        pass &= change < STABILITY;
        parts.push(format!("p={p}: {a:.4}->{b:.4} ({:.2}%)", 100.0 * change));
    }
    outcome(pass, parts.join(", "))
}

fn read_dir(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn cli_report() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = tmp.path().join(name);
        let start = Instant::now();
        let status = Command::new(env!("CARGO_BIN_EXE_weightlab"))
            .args(["report", "--p", "4", "--delta", "1", "--out"])
            .arg(&out)
            .output()
            .unwrap()
            .status;
        (status.code(), start.elapsed().as_secs_f64(), out)
    };
    let (code, secs, first) = run("a");
    let (code2, _, second) = run("b");
    let summary: serde_json::Value = match fs::read(first.join("summary.json")) {
        Ok(bytes) => serde_json::from_slice(&bytes).unwrap(),
        Err(_) => return outcome(false, format!("exit {code:?}, no summary.json")),
    };
    let manifest: Vec<&str> = summary["manifest"]
        .as_array()
        .map(|a| a.iter().filter_map(|v| v.as_str()).collect())
        .unwrap_or_default();
    let required = ["ap.csv", "testing.csv", "quadap.csv", "fit.json", "summary.json"];
    let complete = required.iter().all(|f| manifest.contains(f) && first.join(f).exists());
    let verdict = summary["verdict_line"].as_str().unwrap_or("");
    let identical = read_dir(&first) == read_dir(&second);
    let pass = code == Some(0)
        && code2 == Some(0)
        && secs < 120.0
        && complete
        && verdict == "bounded/bounded/bounded/divergent"
        && identical;
    outcome(
        pass,
        format!("exit {code:?} in {secs:.1}s, manifest complete: {complete}, verdict {verdict}, reruns identical: {identical}"),
    )
}

fn main() {
    let criteria: [(&str, Check); 9] = [
        ("central zero and mirror symmetry", central_zero),
        ("mass identities", mass_identities),
        ("quadratic LHS", quadratic_lhs),
        ("quadratic RHS growth", quadratic_rhs_growth),
        ("direct vs closed consistency", direct_closed_consistency),
        ("scalar conditions bounded", scalar_conditions),
        ("certified bound soundness", bound_soundness),
        ("self-similarity energy", selfsim_stability),
        ("CLI report contract", cli_report),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} {} {name}: {} [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("{}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
