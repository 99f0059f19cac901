use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::cantor::{Variant, MAX_OMEGA_DEPTH};
use crate::config::{ExponentConfig, P_MAX, P_MIN};
use crate::criteria::MAX_TESTING_GENERATION;
use crate::transform::{MAX_CLUSTER_DEPTH, MAX_ZERO_GENERATION};

pub const DEFAULT_P: f64 = 4.0;
pub const DEFAULT_DELTA: f64 = 1.0;
pub const DEFAULT_DEPTH_OMEGA: u32 = 16;
pub const DEFAULT_DEPTH_SIGMA: u32 = 16;
pub const DEFAULT_FAMILY_N: u32 = 14;
pub const DEFAULT_NMAX: u64 = 1_000_000;
pub const DEFAULT_ZERO_GENERATION: u32 = 10;
pub const DEFAULT_SCAN_GENERATION: u32 = 6;
pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_OUT: &str = "weightlab-out";
/// Largest family cutoff for the atom-by-atom sums; σ is taken six generations deeper.
pub const MAX_FAMILY_N: u32 = 16;
pub const NMAX_RANGE: (u64, u64) = (100, 100_000_000);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Zeros of Hω in every gap up to --max-k.
    Zeros,
    /// σ masses per generation against their closed forms.
    Masses,
    /// Two-tailed Muckenhoupt products over Cantor intervals and gaps.
    Ap,
    /// Forward and backward local testing integrals.
    Testing,
    /// Square-function functional: closed-form series, growth fit and atom sums.
    Quadap,
    /// Energy of the centered σ against ω.
    Selfsim,
    /// A_p, testing and the square-function functional with a combined verdict.
    Report,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Zeros => "zeros",
            Command::Masses => "masses",
            Command::Ap => "ap",
            Command::Testing => "testing",
            Command::Quadap => "quadap",
            Command::Selfsim => "selfsim",
            Command::Report => "report",
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "weightlab",
    version,
    about = "Cantor weight pairs and two-weight conditions for the Hilbert transform"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Args, Debug, Default)]
struct Flags {
    /// Exponent p in [1.05, 20].
    #[arg(long, global = true, allow_negative_numbers = true)]
    p: Option<f64>,
    /// Positive parameter δ of the test family.
    #[arg(long, global = true, allow_negative_numbers = true)]
    delta: Option<f64>,
    /// ω quadrature depth N.
    #[arg(long, global = true)]
    depth_omega: Option<u32>,
    /// σ truncation generation L.
    #[arg(long, global = true)]
    depth_sigma: Option<u32>,
    /// Cutoff of the test family for the atom-by-atom sums.
    #[arg(long, global = true)]
    family_n: Option<u32>,
    /// Deepest generation: gaps for `zeros`, intervals for `ap` and `testing`.
    #[arg(long, global = true)]
    max_k: Option<u32>,
    /// Largest cutoff of the closed-form series.
    #[arg(long, global = true)]
    nmax: Option<u64>,
    /// Zero position tolerance relative to the gap length.
    #[arg(long, global = true, allow_negative_numbers = true)]
    tol: Option<f64>,
    /// Atom placement in the gaps: centered or zeroed.
    #[arg(long, global = true)]
    variant: Option<String>,
    /// Run the dual inequality (p', ω, σ).
    #[arg(long, global = true)]
    dual: bool,
    /// Reuse a zero table written by `zeros`.
    #[arg(long, global = true)]
    zeros_file: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// JSON file with default values for any of the flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Also write log-log plots.
    #[arg(long, global = true)]
    svg: bool,
}

/// Keys accepted in a `--config` file; flags given on the command line win.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    p: Option<f64>,
    delta: Option<f64>,
    depth_omega: Option<u32>,
    depth_sigma: Option<u32>,
    family_n: Option<u32>,
    max_k: Option<u32>,
    nmax: Option<u64>,
    tol: Option<f64>,
    variant: Option<String>,
    dual: Option<bool>,
    zeros_file: Option<PathBuf>,
    out: Option<PathBuf>,
    svg: Option<bool>,
}

/// A fully resolved and validated run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub p: f64,
    pub delta: f64,
    pub dual: bool,
    pub depth_omega: u32,
    pub depth_sigma: u32,
    pub family_n: u32,
    /// As given; each command has its own default.
    pub max_k: Option<u32>,
    pub nmax: u64,
    pub tol: f64,
    pub variant: Variant,
    pub zeros_file: Option<PathBuf>,
    pub out: PathBuf,
    pub svg: bool,
}

impl RunConfig {
    /// Exponent configuration after the optional dual swap.
    pub fn exponents(&self) -> ExponentConfig {
        let cfg = ExponentConfig::new(self.p, self.delta).expect("validated");
        if self.dual {
            cfg.dual_swap()
        } else {
            cfg
        }
    }

    pub fn zero_generation(&self) -> u32 {
        self.max_k.unwrap_or(DEFAULT_ZERO_GENERATION)
    }

    pub fn scan_generation(&self) -> u32 {
        self.max_k.unwrap_or(DEFAULT_SCAN_GENERATION)
    }
}

/// Why parsing stopped: a message and the process exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub code: i32,
    pub message: String,
}

impl ConfigError {
    fn invalid(flag: &str, message: impl fmt::Display) -> Self {
        Self {
            code: super::EXIT_CONFIG,
            message: format!("--{flag}: {message}"),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

/// Parses the command line, merges the optional JSON file and validates.
///
/// Help and version requests come back as a `ConfigError` with code 0.
pub fn parse_config<I, T>(args: I) -> Result<RunConfig, ConfigError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| ConfigError {
        code: if e.use_stderr() {
            super::EXIT_CONFIG
        } else {
            super::EXIT_OK
        },
        message: e.render().to_string(),
    })?;
    let file = match &cli.flags.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError::invalid("config", format!("{}: {e}", path.display())))?;
            serde_json::from_str::<FileConfig>(&text)
                .map_err(|e| ConfigError::invalid("config", format!("{}: {e}", path.display())))?
        }
        None => FileConfig::default(),
    };
    let f = cli.flags;

    let p = f.p.or(file.p).unwrap_or(DEFAULT_P);
    if !(P_MIN..=P_MAX).contains(&p) {
        return Err(ConfigError::invalid("p", format!("{p} is outside [{P_MIN}, {P_MAX}]")));
    }
    let delta = f.delta.or(file.delta).unwrap_or(DEFAULT_DELTA);
    if !(delta.is_finite() && delta > 0.0) {
        return Err(ConfigError::invalid("delta", format!("{delta} must be positive")));
    }
    let depth_omega = f.depth_omega.or(file.depth_omega).unwrap_or(DEFAULT_DEPTH_OMEGA);
    if depth_omega > MAX_OMEGA_DEPTH {
        return Err(ConfigError::invalid(
            "depth-omega",
            format!("{depth_omega} exceeds {MAX_OMEGA_DEPTH}"),
        ));
    }
    let depth_sigma = f.depth_sigma.or(file.depth_sigma).unwrap_or(DEFAULT_DEPTH_SIGMA);
    if depth_sigma > MAX_CLUSTER_DEPTH {
        return Err(ConfigError::invalid(
            "depth-sigma",
            format!("{depth_sigma} exceeds {MAX_CLUSTER_DEPTH}"),
        ));
    }
    let family_n = f.family_n.or(file.family_n).unwrap_or(DEFAULT_FAMILY_N);
    if !(1..=MAX_FAMILY_N).contains(&family_n) {
        return Err(ConfigError::invalid(
            "family-n",
            format!("{family_n} is outside [1, {MAX_FAMILY_N}]"),
        ));
    }
    let command = cli.command;
    let max_k = f.max_k.or(file.max_k);
    if let Some(k) = max_k {
        let limit = match command {
            Command::Zeros => MAX_ZERO_GENERATION,
            _ => MAX_TESTING_GENERATION,
        };
        if k > limit {
            return Err(ConfigError::invalid(
                "max-k",
                format!("{k} exceeds {limit} for {}", command.name()),
            ));
        }
    }
    let nmax = f.nmax.or(file.nmax).unwrap_or(DEFAULT_NMAX);
    if !(NMAX_RANGE.0..=NMAX_RANGE.1).contains(&nmax) {
        return Err(ConfigError::invalid(
            "nmax",
            format!("{nmax} is outside [{}, {}]", NMAX_RANGE.0, NMAX_RANGE.1),
        ));
    }
    let tol = f.tol.or(file.tol).unwrap_or(DEFAULT_TOL);
    if !(tol > 0.0 && tol <= 1e-3) {
        return Err(ConfigError::invalid("tol", format!("{tol} is outside (0, 1e-3]")));
    }
    let variant = match f.variant.or(file.variant) {
        Some(v) => v.parse::<Variant>().map_err(|e| ConfigError::invalid("variant", e))?,
        None => Variant::Zeroed,
    };
    Ok(RunConfig {
        command,
        p,
        delta,
        dual: f.dual || file.dual.unwrap_or(false),
        depth_omega,
        depth_sigma,
        family_n,
        max_k,
        nmax,
        tol,
        variant,
        zeros_file: f.zeros_file.or(file.zeros_file),
        out: f.out.or(file.out).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
        svg: f.svg || file.svg.unwrap_or(false),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn parse(args: &[&str]) -> Result<RunConfig, ConfigError> {
        parse_config(std::iter::once("weightlab").chain(args.iter().copied()))
    }

    #[test]
    fn defaults() {
        let c = parse(&["report"]).unwrap();
        assert_eq!((c.p, c.delta, c.depth_omega, c.depth_sigma), (4.0, 1.0, 16, 16));
        assert_eq!((c.family_n, c.nmax, c.tol), (14, 1_000_000, 1e-12));
        assert_eq!(c.zero_generation(), 10);
        assert_eq!(c.scan_generation(), 6);
        assert_eq!(c.variant, Variant::Zeroed);
    }

    #[test]
    fn quadap_flags() {
        let c = parse(&["quadap", "--p", "4", "--delta", "1", "--nmax", "1000000"]).unwrap();
        assert_eq!(c.command, Command::Quadap);
        assert_eq!(c.nmax, 1_000_000);
    }

    #[test]
    fn out_of_range_values_name_the_flag() {
        let e = parse(&["ap", "--p", "0.5"]).unwrap_err();
        assert_eq!(e.code, 2);
        assert!(e.message.starts_with("--p:"));
        assert!(parse(&["ap", "--delta", "-1"])
            .unwrap_err()
            .message
            .starts_with("--delta:"));
        assert!(parse(&["testing", "--max-k", "9"]).is_err());
        assert!(parse(&["zeros", "--max-k", "9"]).is_ok());
        assert!(parse(&["ap", "--variant", "middle"])
            .unwrap_err()
            .message
            .starts_with("--variant:"));
        assert_eq!(parse(&["nonsense"]).unwrap_err().code, 2);
        assert_eq!(parse(&["--help"]).unwrap_err().code, 0);
    }

    #[test]
    fn flags_override_file() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(f, "{{\"p\": 2, \"delta\": 0.5, \"dual\": true}}").unwrap();
        let path = f.path().to_str().unwrap();
        let c = parse(&["ap", "--config", path, "--p", "4"]).unwrap();
        assert_eq!((c.p, c.delta, c.dual), (4.0, 0.5, true));
        let c = parse(&["ap", "--config", path]).unwrap();
        assert_eq!(c.p, 2.0);
    }

    #[test]
    fn unknown_file_keys_are_rejected() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(f, "{{\"q\": 2}}").unwrap();
        let e = parse(&["ap", "--config", f.path().to_str().unwrap()]).unwrap_err();
        assert!(e.message.starts_with("--config:"));
    }

    #[test]
    fn dual_exponents() {
        let c = parse(&["quadap", "--p", "1.3333333333333333", "--dual"]).unwrap();
        assert!((c.exponents().p() - 4.0).abs() < 1e-12);
    }
}
