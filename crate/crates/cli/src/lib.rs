//! Command-line front end: argument definitions, run reports and the
//! implementation of every subcommand.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use patrol_core::{Exponent, Geometry, WeightLaw};

pub mod bench;
pub mod commands;

pub const DEFAULT_EPS: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Parse {
        path: PathBuf,
        #[source]
        source: patrol_core::Error,
    },
    #[error(transparent)]
    Domain(#[from] patrol_core::Error),
    #[error("{0}")]
    Usage(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Io { .. } | CliError::Parse { .. } | CliError::Usage(_) | CliError::Csv(_) => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Machine-readable record of one run. Everything except `timings` is a
/// function of the inputs and flags.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub inputs: Vec<String>,
    pub instance_digest: Option<String>,
    pub parameters: serde_json::Value,
    pub results: serde_json::Value,
    pub checks: Vec<CheckOutcome>,
    /// Milliseconds.
    pub timings: BTreeMap<String, f64>,
}

impl RunReport {
    pub fn new(command: &str) -> Self {
        RunReport {
            command: command.to_string(),
            inputs: Vec::new(),
            instance_digest: None,
            parameters: serde_json::Value::Null,
            results: serde_json::Value::Null,
            checks: Vec::new(),
            timings: BTreeMap::new(),
        }
    }

    pub fn all_checks_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Result of a subcommand that ran to completion.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: RunReport,
    pub summary: String,
    pub exit_code: u8,
}

/// `sha256:` hex digest of a document's bytes.
pub fn digest(bytes: &[u8]) -> String {
    let hash = Sha256::digest(bytes);
    let hex: String = hash.iter().map(|b| format!("{b:02x}")).collect();
    format!("sha256:{hex}")
}

pub(crate) fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

#[derive(Debug, Parser)]
#[command(name = "patrol", version, about = "Periodic patrol schedules over finite metric spaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ReportOut {
    /// Write the JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load an instance and check that its distances form a metric.
    Validate {
        instance: PathBuf,
        #[command(flatten)]
        report: ReportOut,
    },
    /// Generate seeded random instances.
    Gen {
        #[arg(long)]
        n: usize,
        /// uniform, random, skewed, dyadic or dyadic:LEVELS
        #[arg(long, default_value = "random")]
        weights: WeightLaw,
        /// euclidean-plane or random-closure
        #[arg(long, default_value = "euclidean-plane")]
        geometry: Geometry,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// With a count above 1, `--out` is a directory and seeds run upward.
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a periodic schedule for an instance.
    Plan {
        instance: PathBuf,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
        #[command(flatten)]
        report: ReportOut,
        /// Write the schedule document here.
        #[arg(long)]
        schedule_out: Option<PathBuf>,
    },
    /// Evaluate a schedule under one or more cost exponents.
    Eval {
        instance: PathBuf,
        schedule: PathBuf,
        /// 2, inf, or any number at least 2; repeatable.
        #[arg(long = "p", default_values = ["inf"])]
        p: Vec<Exponent>,
        #[command(flatten)]
        report: ReportOut,
    },
    /// Exact shortest closed tour through a subset.
    OracleTsp {
        instance: PathBuf,
        /// Comma-separated labels; all points when absent.
        #[arg(long, value_delimiter = ',')]
        subset: Option<Vec<String>>,
        #[command(flatten)]
        report: ReportOut,
    },
    /// Best schedule among all short periods (an upper bound on the optimum).
    OracleOpt {
        instance: PathBuf,
        #[arg(long = "p", default_value = "inf")]
        p: Exponent,
        /// Defaults to the number of points.
        #[arg(long)]
        max_period: Option<usize>,
        #[command(flatten)]
        report: ReportOut,
    },
    /// Best partition of a subset into at most k spanning trees.
    OracleCover {
        instance: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, value_delimiter = ',')]
        subset: Option<Vec<String>>,
        #[command(flatten)]
        report: ReportOut,
    },
    /// Min-max tree cover, or a single budget probe with `--budget`.
    Treecover {
        instance: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
        #[arg(long, value_delimiter = ',')]
        subset: Option<Vec<String>>,
        #[arg(long)]
        budget: Option<f64>,
        #[command(flatten)]
        report: ReportOut,
    },
    /// Attacker best response against a schedule.
    Attack {
        instance: PathBuf,
        schedule: PathBuf,
        #[command(flatten)]
        report: ReportOut,
    },
    /// Turn a mixed strategy into one deterministic schedule.
    Mix {
        instance: PathBuf,
        strategy: PathBuf,
        /// Write the schedule document here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Plan every instance of a corpus and tabulate ratios.
    Bench {
        /// Directory of instance documents (`*.json`).
        corpus: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
        /// Add this many generated instances.
        #[arg(long, default_value_t = 0)]
        random: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Largest generated instance.
        #[arg(long, default_value_t = 12)]
        max_n: usize,
        /// Period cap for the brute-force comparison on small instances.
        #[arg(long, default_value_t = 8)]
        max_period: usize,
        #[command(flatten)]
        report: ReportOut,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

impl Command {
    /// Path the JSON report should be written to, if any.
    pub fn report_path(&self) -> Option<&Path> {
        match self {
            Command::Gen { .. } => None,
            Command::Mix { report, .. } => report.as_deref(),
            Command::Validate { report, .. }
            | Command::Plan { report, .. }
            | Command::Eval { report, .. }
            | Command::OracleTsp { report, .. }
            | Command::OracleOpt { report, .. }
            | Command::OracleCover { report, .. }
            | Command::Treecover { report, .. }
            | Command::Attack { report, .. }
            | Command::Bench { report, .. } => report.out.as_deref(),
        }
    }
}

/// Runs a parsed command, writing its report and side files.
pub fn run(cli: &Cli) -> CliResult<Outcome> {
    let outcome = commands::dispatch(&cli.command)?;
    if let Some(path) = cli.command.report_path() {
        write_file(path, &outcome.report.to_json())?;
    }
    Ok(outcome)
}

pub(crate) fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}
