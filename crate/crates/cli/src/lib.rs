//! Scenario-driven front end for the `fibconn` validation library.
//!
//! A scenario file names a group, connection fields, an optional chart
//! change and curve, and a list of suites. Running it produces a
//! [`report::RunReport`]; the binary maps the outcome to exit codes
//! 0 (all suites pass), 1 (a validation failed) and 2 (configuration error).

pub mod bundled;
pub mod error;
pub mod registry;
pub mod report;
pub mod run;
pub mod scenario;

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};

pub use error::ConfigError;
pub use report::RunReport;
pub use run::{run_parsed, run_scenario};
pub use scenario::{Overrides, Scenario};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Command-line flags override the corresponding scenario values.
#[derive(Debug, Parser)]
#[command(name = "fibconn", version, about = "Validate fiber bundle connection fields on sampled points")]
pub struct Cli {
    /// Sampling seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Number of sampled points per suite.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Absolute residual tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Write the JSON report to this path.
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
    /// Suppress the summary table; print the JSON report to stdout unless
    /// `--report` is given.
    #[arg(long, global = true)]
    pub json_only: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario file or a bundled scenario by name.
    Run { scenario: String },
    /// List bundled scenarios.
    List,
}

/// Execute a parsed command line, writing to `out` and `err`; returns the
/// process exit code.
pub fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match &cli.command {
        Command::List => {
            for (name, description) in bundled::list() {
                let _ = writeln!(out, "{name:<26} {description}");
            }
            EXIT_PASS
        }
        Command::Run { scenario } => {
            let overrides = Overrides {
                seed: cli.seed,
                samples: cli.samples,
                abs_tol: cli.tol,
            };
            let start = Instant::now();
            let report = match run_scenario(scenario, overrides) {
                Ok(r) => r,
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    return EXIT_CONFIG;
                }
            };
            let elapsed = start.elapsed().as_secs_f64();
            let json = report.to_json();
            if let Some(path) = &cli.report {
                if let Err(e) = std::fs::write(path, &json) {
                    let _ = writeln!(err, "error: cannot write report {}: {e}", path.display());
                    return EXIT_CONFIG;
                }
            }
            if cli.json_only {
                if cli.report.is_none() {
                    let _ = out.write_all(json.as_bytes());
                }
            } else {
                let _ = out.write_all(report.table(elapsed).as_bytes());
            }
            if report.passed {
                EXIT_PASS
            } else {
                EXIT_FAIL
            }
        }
    }
}
