//! Command-line driver: configuration, experiment orchestration and report
//! emission.
//!
//! Exit status is 0 when every asserted check passes, 1 when one fails, and
//! 2 when the configuration is invalid or an experiment cannot run.

pub mod config;
pub mod experiments;
pub mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

pub use config::{ConfigError, ExperimentConfig, Kind, Overrides, SpaceSpec};
pub use experiments::{run, Outcome};
pub use report::{emit_report, read_report, PlotData, Record};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILED_CHECK: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "mhl", version, about = "Harmonic maps into EVI spaces: solver and property checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a harmonic map and check subharmonicity, the weak inequality and
    /// the maximum principles.
    Harmonic(RunArgs),
    /// Random EVI axiom suite on one plugin.
    EviSuite(RunArgs),
    /// Nonlocal form against its gradient limit.
    Ipp(RunArgs),
    /// δ-level perturbation inequality.
    Perturbation(RunArgs),
    /// L∞, L¹ and Lᵖ maximum principles.
    MaxPrinciples(RunArgs),
    /// Rewrite `summary.csv` from an existing `report.jsonl` and print it.
    Report {
        #[arg(long, default_value = "mhl-out")]
        out: PathBuf,
    },
}

#[derive(Debug, Args, Clone, Default)]
pub struct RunArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub space: Option<String>,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            out: self.out.clone(),
            n: self.n,
            space: self.space.clone(),
        }
    }
}

/// Reads the config file (if any) and applies the flags.
pub fn load_config(kind: Kind, args: &RunArgs) -> Result<ExperimentConfig, ConfigError> {
    let text = match &args.config {
        Some(p) => std::fs::read_to_string(p).map_err(|e| ConfigError(format!("{}: {e}", p.display())))?,
        None => String::new(),
    };
    ExperimentConfig::build(kind, &text, &args.overrides())
}

/// Runs the configured experiment, writes its reports, and returns the exit
/// status.
pub fn run_experiment(cfg: &ExperimentConfig) -> u8 {
    let outcome = match run(cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    if let Err(e) = emit_report(&cfg.out, &outcome.records, &outcome.plots) {
        eprintln!("error: cannot write reports to {}: {e}", cfg.out.display());
        return EXIT_CONFIG;
    }
    print_summary(&outcome.records);
    status(&outcome.records)
}

fn status(records: &[Record]) -> u8 {
    if records.iter().any(Record::is_failure) {
        EXIT_FAILED_CHECK
    } else {
        EXIT_OK
    }
}

fn print_summary(records: &[Record]) {
    for r in records {
        let informational = r.metadata.get("indicative").and_then(|v| v.as_bool()).unwrap_or(false)
            || r.metadata.get("applicable").and_then(|v| v.as_bool()) == Some(false);
        let tag = if r.is_failure() {
            "FAIL"
        } else if informational {
            "info"
        } else {
            "pass"
        };
        println!("{tag:4}  {:<24} slack {}  tol {}", r.check, r.slack, r.tolerance);
    }
    let failed = records.iter().filter(|r| r.is_failure()).count();
    println!("{} checks, {failed} failed", records.len());
}

pub fn main_with(cli: Cli) -> ExitCode {
    let (kind, args) = match cli.command {
        Command::Harmonic(a) => (Kind::Harmonic, a),
        Command::EviSuite(a) => (Kind::EviSuite, a),
        Command::Ipp(a) => (Kind::Ipp, a),
        Command::Perturbation(a) => (Kind::Perturbation, a),
        Command::MaxPrinciples(a) => (Kind::MaxPrinciples, a),
        Command::Report { out } => {
            return match read_report(&out) {
                Ok(records) => {
                    if let Err(e) = report::write_summary(&out, &records) {
                        eprintln!("error: {e}");
                        return ExitCode::from(EXIT_CONFIG);
                    }
                    print_summary(&records);
                    ExitCode::from(status(&records))
                }
                Err(e) => {
                    eprintln!("error: cannot read {}: {e}", out.join(report::REPORT_FILE).display());
                    ExitCode::from(EXIT_CONFIG)
                }
            };
        }
    };
    match load_config(kind, &args) {
        Ok(cfg) => ExitCode::from(run_experiment(&cfg)),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
