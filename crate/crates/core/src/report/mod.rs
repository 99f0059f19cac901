//! The `weightlab` command line: configuration, orchestration and output files.

mod config;
mod run;
mod svg;

pub use config::{parse_config, Command, ConfigError, RunConfig};
pub use run::{run, RunOutcome, GROWTH_TOLERANCE, STABILITY_TOLERANCE};
pub use svg::{emit_svg_loglog, render_svg_loglog};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Name of the marker left in the output directory by a failed computation.
pub const FAILED_MARKER: &str = "_FAILED";

/// Caps the worker pool from `WEIGHTLAB_THREADS`.
pub fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("WEIGHTLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| format!("WEIGHTLAB_THREADS must be a positive integer, got {raw:?}"))?;
    #[cfg(feature = "parallel")]
    {
        // A pool built earlier in the same process keeps its size.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let config = match parse_config(args) {
        Ok(c) => c,
        Err(e) if e.code == EXIT_OK => {
            print!("{}", e.message);
            return EXIT_OK;
        }
        Err(e) => {
            eprintln!("{}", e.message.trim_end());
            return e.code;
        }
    };
    if let Err(message) = configure_threads() {
        eprintln!("{message}");
        return EXIT_CONFIG;
    }
    let outcome = run(&config);
    for (step, seconds) in &outcome.timings {
        eprintln!("timing {step}: {seconds:.2}s");
    }
    if let Some(line) = outcome.summary.get("verdict_line").and_then(|v| v.as_str()) {
        println!("verdict: {line} (A_p/testing/quad-LHS/quad-RHS)");
    }
    match &outcome.message {
        Some(m) => eprintln!("{m}"),
        None => println!("wrote {} files to {}", outcome.manifest.len(), config.out.display()),
    }
    outcome.code
}
