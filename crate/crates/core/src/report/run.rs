use std::fs;
use std::io::BufReader;
use std::time::Instant;

use serde_json::{json, Map, Value};

use crate::cantor::{
    precursor_ratio, sigma_tail_mass, sigma_total_mass_closed, sigma_truncated, sigma_weight, Variant,
};
use crate::config::{ExponentConfig, Roles};
use crate::criteria::{
    ap_constant, ap_family, fit_growth, fit_loglog, format_real, geometric_cutoffs, quad_lhs_closed, quad_lhs_direct,
    quad_rhs_closed, quad_rhs_closed_series, quad_rhs_direct, selfsim_energy, testing_scan, GrowthFit, ScanResult,
    ScanRow, WeightPair,
};
use crate::error::{Error, Result};
use crate::report::config::{Command, RunConfig};
use crate::report::{render_svg_loglog, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, FAILED_MARKER};
use crate::transform::{zero_table, zero_table_depth, ZeroTable};

/// Largest relative change between two refinements still called stable.
pub const STABILITY_TOLERANCE: f64 = 0.05;
/// Tolerance on fitted growth exponents.
pub const GROWTH_TOLERANCE: f64 = 0.05;
/// Extra σ generations below the family cutoff in the atom-by-atom sums.
const FAMILY_MARGIN: u32 = 6;
const FIT_POINTS: usize = 7;
/// Generations by which the coarse run of a stability check is shallower.
const REFINEMENT_STEP: u32 = 2;
/// Generations between the quadrature depth and the σ truncation in testing scans.
const TESTING_GAP: u32 = 2;

/// What a run produced. `timings` are kept out of the files so that repeated
/// runs write identical bytes.
#[derive(Debug)]
pub struct RunOutcome {
    pub code: i32,
    pub summary: Value,
    pub manifest: Vec<String>,
    pub message: Option<String>,
    pub timings: Vec<(String, f64)>,
}

struct Session<'a> {
    config: &'a RunConfig,
    cfg: ExponentConfig,
    files: Vec<(String, Vec<u8>)>,
    results: Map<String, Value>,
    verdicts: Map<String, Value>,
    notes: Vec<String>,
    zeros: Option<ZeroTable>,
    timings: Vec<(String, f64)>,
}

fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn relative_change(coarse: f64, fine: f64) -> f64 {
    (fine - coarse).abs() / coarse.abs().max(f64::MIN_POSITIVE)
}

fn stability_verdict(changes: &[f64]) -> &'static str {
    if changes.iter().all(|c| c.is_finite() && *c < STABILITY_TOLERANCE) {
        "bounded"
    } else {
        "unresolved"
    }
}

fn growth_verdict(alpha: f64) -> &'static str {
    if alpha > GROWTH_TOLERANCE {
        "divergent"
    } else if alpha.abs() <= GROWTH_TOLERANCE {
        "bounded"
    } else {
        "unresolved"
    }
}

fn csv(scan: &ScanResult) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    scan.write_csv(&mut buf)?;
    Ok(buf)
}

fn fit_json(fit: &GrowthFit) -> Vec<u8> {
    let v = json!({
        "alpha": num(fit.alpha),
        "intercept": num(fit.intercept),
        "max_residual": num(fit.max_residual),
        "target": num(fit.target),
    });
    let mut s = serde_json::to_string_pretty(&v).expect("plain JSON");
    s.push('\n');
    s.into_bytes()
}

impl<'a> Session<'a> {
    fn new(config: &'a RunConfig) -> Self {
        Self {
            config,
            cfg: config.exponents(),
            files: Vec::new(),
            results: Map::new(),
            verdicts: Map::new(),
            notes: Vec::new(),
            zeros: None,
            timings: Vec::new(),
        }
    }

    fn add_file(&mut self, name: &str, bytes: Vec<u8>) {
        match self.files.iter_mut().find(|(n, _)| n == name) {
            Some(slot) => slot.1 = bytes,
            None => self.files.push((name.to_string(), bytes)),
        }
    }

    fn note(&mut self, text: &str) {
        if !self.notes.iter().any(|n| n == text) {
            self.notes.push(text.to_string());
        }
    }

    fn timed<T>(&mut self, step: &str, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f(self);
        self.timings.push((step.to_string(), start.elapsed().as_secs_f64()));
        out
    }

    /// Zeros for every gap up to generation `k`, from `--zeros-file` or computed.
    fn zero_table(&mut self, k: u32) -> Result<&ZeroTable> {
        if self.zeros.as_ref().is_some_and(|z| z.covers(k)) {
            return Ok(self.zeros.as_ref().expect("checked"));
        }
        let table = match &self.config.zeros_file {
            Some(path) => {
                let file = fs::File::open(path)
                    .map_err(|e| Error::InvalidParameter(format!("--zeros-file {}: {e}", path.display())))?;
                let table = ZeroTable::read_csv(BufReader::new(file))?;
                self.timed("verify zeros", |_| table.verify())?;
                if !table.covers(k) {
                    return Err(Error::InvalidParameter(format!(
                        "--zeros-file covers gaps up to generation {}, generation {k} is needed",
                        table.max_generation()
                    )));
                }
                table
            }
            None => {
                let depth = zero_table_depth(k, self.config.depth_omega);
                let table = self.timed("zeros", |_| zero_table(k, self.config.tol, depth))?;
                let mut buf = Vec::new();
                table.write_csv(&mut buf)?;
                self.add_file("zeros.csv", buf);
                table
            }
        };
        self.zeros = Some(table);
        Ok(self.zeros.as_ref().expect("just stored"))
    }

    /// Loads the zero table once at the finest generation a command needs.
    fn prefetch_zeros(&mut self, k: u32) -> Result<()> {
        if self.config.variant == Variant::Zeroed {
            self.zero_table(k)?;
        }
        Ok(())
    }

    fn pair(&mut self, omega_depth: u32, sigma_generation: u32) -> Result<WeightPair> {
        let cfg = self.cfg;
        let variant = self.config.variant;
        let zeros = match variant {
            Variant::Zeroed => Some(self.zero_table(sigma_generation)?.clone()),
            Variant::Centered => None,
        };
        WeightPair::new(cfg, omega_depth, sigma_generation, variant, zeros.as_ref())
    }

    fn zeros_command(&mut self) -> Result<()> {
        let k = self.config.zero_generation();
        let table = self.zero_table(k)?.truncated(k).expect("covers k");
        let mut buf = Vec::new();
        table.write_csv(&mut buf)?;
        self.add_file("zeros.csv", buf);
        let max_residual = table.iter().map(|(_, e)| e.residual).fold(0.0, f64::max);
        let depth = table.iter().map(|(_, e)| e.depth).max().unwrap_or(0);
        self.results.insert(
            "zeros".into(),
            json!({
                "max_generation": k,
                "count": table.len(),
                "depth_omega": depth,
                "max_residual": num(max_residual),
                "min_edge_clearance_by_generation": table.edge_clearance().into_iter().map(num).collect::<Vec<_>>(),
            }),
        );
        Ok(())
    }

    fn masses_command(&mut self) -> Result<()> {
        let cfg = self.cfg;
        let l = self.config.depth_sigma;
        let sigma = sigma_truncated(&cfg, l, Variant::Centered, None)?;
        let mut by_generation = vec![crate::sum::NeumaierSum::new(); l as usize + 1];
        for a in sigma.atoms() {
            by_generation[a.generation().expect("σ atoms are indexed") as usize] += a.mass;
        }
        let mut text =
            String::from("k,atoms,weight,generation_mass,cumulative_mass,closed_form_cumulative,precursor_ratio\n");
        let mut cumulative = crate::sum::NeumaierSum::new();
        for (k, g) in by_generation.iter().enumerate() {
            cumulative += g.value();
            let k32 = k as u32;
            text.push_str(&format!(
                "{k},{},{},{},{},{},{}\n",
                1u64 << k,
                format_real(sigma_weight(&cfg, k32).value()),
                format_real(g.value()),
                format_real(cumulative.value()),
                format_real(sigma_total_mass_closed(&cfg, k32)),
                format_real(precursor_ratio(&cfg, k32)),
            ));
        }
        self.add_file("masses.csv", text.into_bytes());
        let closed = sigma_total_mass_closed(&cfg, l);
        let precursor = (0..=40)
            .map(|k| (precursor_ratio(&cfg, k) - 1.0).abs())
            .fold(0.0, f64::max);
        self.results.insert(
            "masses".into(),
            json!({
                "depth_sigma": l,
                "total_mass": num(sigma.total_mass()),
                "closed_form": num(closed),
                "relative_defect": num(relative_change(closed, sigma.total_mass())),
                "tail_mass": num(sigma_tail_mass(&cfg, l)),
                "max_precursor_defect": num(precursor),
            }),
        );
        Ok(())
    }

    fn ap_command(&mut self) -> Result<()> {
        let (n, l) = (self.config.depth_omega, self.config.depth_sigma);
        let family = ap_family(self.config.scan_generation(), true);
        let mut table = ScanResult::new(["interval", "left", "right"]);
        self.prefetch_zeros(l)?;
        let coarse = if n >= REFINEMENT_STEP && l >= REFINEMENT_STEP {
            let pair = self.pair(n - REFINEMENT_STEP, l - REFINEMENT_STEP)?;
            let scan = self.timed("ap coarse", |_| ap_constant(&pair, &family))?;
            let sup = scan.sup();
            table.extend(scan);
            Some(sup)
        } else {
            None
        };
        let pair = self.pair(n, l)?;
        let fine = self.timed("ap", |_| ap_constant(&pair, &family))?;
        let row = fine.sup_row().expect("family is nonempty").clone();
        table.extend(fine);
        self.add_file("ap.csv", csv(&table)?);
        let change = coarse.map_or(f64::NAN, |c| relative_change(c, row.value));
        let verdict = stability_verdict(&[change]);
        self.results.insert(
            "ap".into(),
            json!({
                "sup": num(row.value),
                "sup_interval": row.params[0],
                "sup_error_bound": num(row.error_bound.unwrap_or(f64::NAN)),
                "coarse_sup": coarse.map_or(Value::Null, num),
                "relative_change": num(change),
                "depths": [n, l],
                "verdict": verdict,
            }),
        );
        self.verdicts.insert("ap".into(), json!(verdict));
        Ok(())
    }

    fn testing_command(&mut self) -> Result<()> {
        let n = self.config.depth_omega;
        if n < TESTING_GAP + REFINEMENT_STEP {
            return Err(Error::InvalidParameter(format!(
                "--depth-omega {n} is too shallow for testing scans (need at least {})",
                TESTING_GAP + REFINEMENT_STEP
            )));
        }
        let l = self.config.depth_sigma.min(n - TESTING_GAP);
        if l < self.config.depth_sigma {
            self.note("testing scans truncate σ at least two generations above the ω quadrature depth, so no σ atom shares a quadrature cylinder");
        }
        let k = self.config.scan_generation();
        let mut table = ScanResult::new(["direction", "k", "j"]);
        self.prefetch_zeros(l)?;
        let coarse = if l >= REFINEMENT_STEP {
            let pair = self.pair(n - REFINEMENT_STEP, l - REFINEMENT_STEP)?;
            let scan = self.timed("testing coarse", |_| testing_scan(&pair, k))?;
            let sups = (scan.forward.sup(), scan.backward.sup());
            table.extend(scan.combined());
            Some(sups)
        } else {
            None
        };
        let pair = self.pair(n, l)?;
        let scan = self.timed("testing", |_| testing_scan(&pair, k))?;
        table.extend(scan.combined());
        self.add_file("testing.csv", csv(&table)?);
        let mut entry = Map::new();
        let mut changes = Vec::new();
        for (name, result, coarse_sup) in [
            ("forward", &scan.forward, coarse.map(|c| c.0)),
            ("backward", &scan.backward, coarse.map(|c| c.1)),
        ] {
            let row = result.sup_row().expect("scan has rows");
            let change = coarse_sup.map_or(f64::NAN, |c| relative_change(c, row.value));
            changes.push(change);
            entry.insert(
                name.into(),
                json!({
                    "sup": num(row.value),
                    "sup_interval": format!("({},{})", row.params[1], row.params[2]),
                    "sup_error_bound": num(row.error_bound.unwrap_or(f64::NAN)),
                    "coarse_sup": coarse_sup.map_or(Value::Null, num),
                    "relative_change": num(change),
                }),
            );
        }
        if scan
            .backward
            .rows
            .iter()
            .chain(&scan.forward.rows)
            .any(|r| r.error_bound.is_some_and(f64::is_infinite))
        {
            self.note("an infinite error bound marks rows integrated against the centered σ, whose missing generations carry no uniform bound");
        }
        let verdict = stability_verdict(&changes);
        entry.insert("depths".into(), json!([n, l]));
        entry.insert("verdict".into(), json!(verdict));
        self.results.insert("testing".into(), Value::Object(entry));
        self.verdicts.insert("testing".into(), json!(verdict));
        Ok(())
    }

    fn quadap_command(&mut self) -> Result<()> {
        let cfg = self.cfg;
        let nmax = self.config.nmax;
        let cutoffs = if nmax >= 10_000 {
            geometric_cutoffs(1_000, nmax, FIT_POINTS)
        } else {
            geometric_cutoffs(10, nmax, 5)
        };
        let rhs = self.timed("quadap closed", |_| Ok(quad_rhs_closed_series(&cfg, &cutoffs)))?;
        let lhs: Vec<f64> = cutoffs.iter().map(|&n| quad_lhs_closed(&cfg, n)).collect();
        let rhs_points: Vec<(f64, f64)> = cutoffs.iter().map(|&n| n as f64).zip(rhs.iter().copied()).collect();
        let lhs_points: Vec<(f64, f64)> = cutoffs.iter().map(|&n| n as f64).zip(lhs.iter().copied()).collect();
        let fit = fit_growth(&rhs_points, &cfg)?;
        let lhs_fit = fit_loglog(&lhs_points, 0.0, 0.0)?;

        let mut table = ScanResult::new(["series", "N"]);
        let plain = |series: &str, n: u64, v: f64, sigma: Option<u32>| ScanRow {
            params: vec![series.to_string(), n.to_string()],
            value: v,
            error_bound: None,
            depth_omega: None,
            depth_sigma: sigma,
        };
        for (i, &n) in cutoffs.iter().enumerate() {
            table.rows.push(plain("rhs_closed", n, rhs[i], None));
        }
        for (i, &n) in cutoffs.iter().enumerate() {
            table.rows.push(plain("lhs_closed", n, lhs[i], None));
        }
        for (i, &n) in cutoffs.iter().enumerate() {
            table.rows.push(plain("fit_residual", n, fit.residuals[i], None));
        }

        let mut direct = Value::Null;
        if cfg.roles() == Roles::Direct {
            let family_n = self.config.family_n;
            let l = family_n + FAMILY_MARGIN;
            self.note("the atom-by-atom square-function sums use the centered σ six generations below the family cutoff; positions enter only through distances of at least |I|");
            let sigma = sigma_truncated(&cfg, l, Variant::Centered, None)?;
            let sums = self.timed("quadap direct", |_| {
                (1..=family_n)
                    .map(|n| Ok((n, quad_lhs_direct(&cfg, n, &sigma)?, quad_rhs_direct(&cfg, n, &sigma)?)))
                    .collect::<Result<Vec<_>>>()
            })?;
            let mut lhs_ratios = Vec::new();
            let mut rhs_ratios = Vec::new();
            for &(n, ld, rd) in &sums {
                let n64 = n as u64;
                let lr = ld / quad_lhs_closed(&cfg, n64);
                let rr = rd / quad_rhs_closed(&cfg, n64);
                table.rows.push(plain("lhs_direct", n64, ld, Some(l)));
                table.rows.push(ScanRow {
                    depth_omega: Some(n),
                    ..plain("rhs_direct", n64, rd, Some(l))
                });
                table.rows.push(plain("lhs_ratio", n64, lr, Some(l)));
                table.rows.push(plain("rhs_ratio", n64, rr, Some(l)));
                lhs_ratios.push(lr);
                rhs_ratios.push(rr);
            }
            let range = |v: &[f64]| {
                let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                json!([num(lo), num(hi)])
            };
            direct = json!({
                "family_n": family_n,
                "depth_sigma": l,
                "lhs_ratio_range": range(&lhs_ratios),
                "rhs_ratio_range": range(&rhs_ratios),
            });
        } else {
            self.note(
                "dual runs report the closed-form series only; the atom-by-atom sums are defined for the direct roles",
            );
        }
        self.add_file("quadap.csv", csv(&table)?);
        self.add_file("fit.json", fit_json(&fit));
        if self.config.svg {
            let corrected: Vec<(f64, f64)> = rhs_points
                .iter()
                .map(|&(n, v)| (n, v * n.ln().powf(fit.log_correction)))
                .collect();
            let svg = render_svg_loglog(&corrected, fit.target, "quadratic functional, log-corrected")?;
            self.add_file("quadap.svg", svg.into_bytes());
        }
        let rhs_verdict = growth_verdict(fit.alpha);
        let lhs_verdict = growth_verdict(lhs_fit.alpha);
        self.note("the test family starts at generation 1 because the root interval has no sibling");
        self.note("the right side integrates over the complement of the tripled interval 3I; logarithms are natural");
        self.results.insert(
            "quadap".into(),
            json!({
                "p": num(cfg.p()),
                "cutoffs": cutoffs,
                "alpha": num(fit.alpha),
                "target": num(fit.target),
                "tolerance": GROWTH_TOLERANCE,
                "within_tolerance": fit.within(GROWTH_TOLERANCE),
                "log_correction": num(fit.log_correction),
                "intercept": num(fit.intercept),
                "max_residual": num(fit.max_residual),
                "lhs_alpha": num(lhs_fit.alpha),
                "rhs_closed_at_nmax": num(*rhs.last().expect("cutoffs nonempty")),
                "lhs_closed_at_nmax": num(*lhs.last().expect("cutoffs nonempty")),
                "direct": direct,
                "verdict_lhs": lhs_verdict,
                "verdict_rhs": rhs_verdict,
            }),
        );
        self.verdicts.insert("quad_lhs".into(), json!(lhs_verdict));
        self.verdicts.insert("quad_rhs".into(), json!(rhs_verdict));
        Ok(())
    }

    fn selfsim_command(&mut self) -> Result<()> {
        let n = self.config.depth_omega;
        if n < TESTING_GAP {
            return Err(Error::InvalidParameter(format!(
                "--depth-omega {n} is too shallow for selfsim"
            )));
        }
        let k_max = self.config.depth_sigma.min(n - TESTING_GAP);
        let cfg = self.cfg;
        let values = self.timed("selfsim", |_| {
            (0..=k_max)
                .map(|k| selfsim_energy(&cfg, k, n))
                .collect::<Result<Vec<_>>>()
        })?;
        let mut table = ScanResult::new(["K"]);
        for (k, &v) in values.iter().enumerate() {
            table.rows.push(ScanRow {
                params: vec![k.to_string()],
                value: v,
                error_bound: None,
                depth_omega: Some(n),
                depth_sigma: Some(k as u32),
            });
        }
        self.add_file("selfsim.csv", csv(&table)?);
        let last = *values.last().expect("K = 0 is always present");
        let change = if values.len() >= 2 {
            relative_change(values[values.len() - 2], last)
        } else {
            f64::NAN
        };
        self.results.insert(
            "selfsim".into(),
            json!({
                "depth_omega": n,
                "max_sigma_generation": k_max,
                "energy": num(last),
                "relative_change_last_step": num(change),
                "increasing": values.windows(2).all(|w| w[1] >= w[0]),
            }),
        );
        Ok(())
    }

    fn execute(&mut self) -> Result<()> {
        match self.config.command {
            Command::Zeros => self.zeros_command(),
            Command::Masses => self.masses_command(),
            Command::Ap => self.ap_command(),
            Command::Testing => self.testing_command(),
            Command::Quadap => self.quadap_command(),
            Command::Selfsim => self.selfsim_command(),
            Command::Report => {
                self.ap_command()?;
                self.testing_command()?;
                self.quadap_command()
            }
        }
    }

    fn summary(&self, error: Option<&Error>, manifest: &[String]) -> Value {
        let c = self.config;
        let mut s = Map::new();
        s.insert("command".into(), json!(c.command.name()));
        s.insert("status".into(), json!(if error.is_some() { "failed" } else { "ok" }));
        if let Some(e) = error {
            s.insert("error".into(), json!(e.to_string()));
        }
        s.insert(
            "config".into(),
            json!({
                "p": num(self.cfg.p()),
                "p_prime": num(self.cfg.p_prime()),
                "delta": num(c.delta),
                "dual": c.dual,
                "depth_omega": c.depth_omega,
                "depth_sigma": c.depth_sigma,
                "family_n": c.family_n,
                "max_k": c.max_k,
                "nmax": c.nmax,
                "tol": num(c.tol),
                "variant": c.variant.as_str(),
                "zeros_file": c.zeros_file.as_ref().map(|p| p.display().to_string()),
            }),
        );
        s.insert("results".into(), Value::Object(self.results.clone()));
        if !self.verdicts.is_empty() {
            s.insert("verdicts".into(), Value::Object(self.verdicts.clone()));
        }
        if c.command == Command::Report && error.is_none() {
            let line: Vec<&str> = ["ap", "testing", "quad_lhs", "quad_rhs"]
                .iter()
                .map(|k| self.verdicts.get(*k).and_then(Value::as_str).unwrap_or("unresolved"))
                .collect();
            s.insert("verdict_line".into(), json!(line.join("/")));
        }
        s.insert("notes".into(), json!(self.notes));
        s.insert("manifest".into(), json!(manifest));
        Value::Object(s)
    }
}

fn write_outputs(config: &RunConfig, files: &[(String, Vec<u8>)]) -> std::io::Result<()> {
    fs::create_dir_all(&config.out)?;
    let marker = config.out.join(FAILED_MARKER);
    if marker.exists() {
        fs::remove_file(&marker)?;
    }
    for (name, bytes) in files {
        fs::write(config.out.join(name), bytes)?;
    }
    Ok(())
}

/// Runs one command and writes its files into the output directory.
///
/// A numerical failure still writes whatever finished, the summary and a
/// `_FAILED` marker, and returns exit code 3.
pub fn run(config: &RunConfig) -> RunOutcome {
    let mut session = Session::new(config);
    let result = session.execute();
    let timings = std::mem::take(&mut session.timings);
    let failure = match result {
        Ok(()) => None,
        Err(e) if e.is_numerical() => Some(e),
        Err(e) => {
            return RunOutcome {
                code: EXIT_CONFIG,
                summary: Value::Null,
                manifest: Vec::new(),
                message: Some(e.to_string()),
                timings,
            }
        }
    };
    let mut files = std::mem::take(&mut session.files);
    let mut manifest: Vec<String> = files.iter().map(|(n, _)| n.clone()).collect();
    manifest.push("summary.json".into());
    if failure.is_some() {
        manifest.push(FAILED_MARKER.into());
    }
    let summary = session.summary(failure.as_ref(), &manifest);
    let mut text = serde_json::to_string_pretty(&summary).expect("plain JSON");
    text.push('\n');
    files.push(("summary.json".into(), text.into_bytes()));
    if let Some(e) = &failure {
        files.push((FAILED_MARKER.into(), format!("{e}\n").into_bytes()));
    }
    if let Err(e) = write_outputs(config, &files) {
        return RunOutcome {
            code: EXIT_CONFIG,
            summary,
            manifest: Vec::new(),
            message: Some(format!("--out {}: {e}", config.out.display())),
            timings,
        };
    }
    RunOutcome {
        code: if failure.is_some() { EXIT_NUMERICAL } else { EXIT_OK },
        summary,
        manifest,
        message: failure.map(|e| e.to_string()),
        timings,
    }
}
