//! Experiment drivers behind the `fnlslab` binary.
//!
//! Each command reads an [`ExperimentConfig`], writes CSV or JSON artifacts
//! that embed the resolved configuration, and finishes with a
//! `manifest.json`. Exit codes: 0 pass, 1 gate failure, 2 configuration
//! error, 3 runtime failure.

pub mod commands;
pub mod config;
pub mod formats;
pub mod output;
pub mod stats;

use std::fmt;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};
use fnls::FnlsError;
use serde_json::{json, Value};

pub use config::ExperimentConfig;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(m) => write!(f, "configuration error: {m}"),
            Self::Runtime(m) => write!(f, "runtime failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<FnlsError> for CliError {
    fn from(e: FnlsError) -> Self {
        match e {
            FnlsError::Config(_) | FnlsError::Domain(_) => Self::Config(e.to_string()),
            other => Self::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Runtime(format!("I/O: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Runtime(format!("CSV: {e}"))
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Runtime(_) => 3,
        }
    }
}

/// What a command produced.
#[derive(Debug, Clone)]
pub struct Report {
    pub pass: bool,
    pub files: Vec<PathBuf>,
    /// Command-specific numbers, also stored in the manifest.
    pub summary: Value,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Quasi,
    DensityLp,
    TauTail,
    Lemma(String),
}

impl Command {
    pub fn name(&self) -> String {
        match self {
            Self::Simulate => "simulate".into(),
            Self::Quasi => "quasi".into(),
            Self::DensityLp => "density-lp".into(),
            Self::TauTail => "tau-tail".into(),
            Self::Lemma(id) => format!("lemma {id}"),
        }
    }
}

/// Runs `cmd` on a pool of `threads` workers (all cores when `None`).
pub fn run_command(cmd: &Command, cfg: &ExperimentConfig, threads: Option<usize>) -> Result<Report, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = threads {
        builder = builder.num_threads(k.max(1));
    }
    let pool = builder.build().map_err(|e| CliError::Runtime(e.to_string()))?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    pool.install(|| match cmd {
        Command::Simulate => commands::simulate::run(cfg),
        Command::Quasi => commands::quasi::run(cfg),
        Command::DensityLp => commands::density_lp::run(cfg),
        Command::TauTail => commands::tau_tail::run(cfg),
        Command::Lemma(id) => commands::lemma::run(cfg, id),
    })
}

/// Runs `cmd`, writes the manifest and returns the exit code.
pub fn execute(cmd: &Command, cfg: &ExperimentConfig, threads: Option<usize>) -> i32 {
    let start = Instant::now();
    let result = run_command(cmd, cfg, threads);
    let (code, status, files, summary, error) = match &result {
        Ok(r) if r.pass => (0, "pass", r.files.clone(), r.summary.clone(), None),
        Ok(r) => (1, "gate failure", r.files.clone(), r.summary.clone(), None),
        Err(e) => (e.exit_code(), "error", Vec::new(), Value::Null, Some(e.to_string())),
    };
    let manifest = json!({
        "command": cmd.name(),
        "status": status,
        "exit_code": code,
        "error": error,
        "files": files.iter().map(|f| f.file_name().map(|n| n.to_string_lossy().into_owned())).collect::<Vec<_>>(),
        "summary": summary,
        "config": cfg,
        "git_describe": output::git_describe(),
        "threads": threads,
        "wall_time_s": start.elapsed().as_secs_f64(),
    });
    if let Err(e) = output::write_json(&cfg.output_dir.join("manifest.json"), &manifest) {
        eprintln!("{e}");
        return 3;
    }
    if let Some(e) = error {
        eprintln!("{e}");
    }
    code
}

#[derive(Parser, Debug)]
#[command(name = "fnlslab", version, about = "Numerical experiments for the truncated fractional cubic NLS")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Integrate one initial datum and tabulate conserved and monitored quantities.
    Simulate,
    /// Monte Carlo test of the pushforward identity.
    Quasi,
    /// L^p norms of the transported density across truncations and times.
    DensityLp,
    /// Survival function of the inverse stopping time.
    TauTail,
    /// Lattice scans, closed forms and identity checks.
    Lemma {
        /// phase, psi, qdiv, sstar, numerology, x3, gauge or density-identity.
        id: String,
    },
}

/// Parses `argv` (including the program name) and runs; returns the exit code.
pub fn main_with_args(argv: Vec<String>) -> i32 {
    let (rest, overrides) = config::split_overrides(argv);
    let cli = match Cli::try_parse_from(rest) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let mut over = overrides;
    if let Some(seed) = cli.seed {
        over.push(("seed".into(), seed.to_string()));
    }
    if let Some(out) = &cli.out {
        over.push(("output_dir".into(), serde_json::to_string(out).expect("path serializes")));
    }
    let cfg = match ExperimentConfig::load(cli.config.as_deref(), &over) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return e.exit_code();
        }
    };
    let cmd = match cli.command {
        Sub::Simulate => Command::Simulate,
        Sub::Quasi => Command::Quasi,
        Sub::DensityLp => Command::DensityLp,
        Sub::TauTail => Command::TauTail,
        Sub::Lemma { id } => Command::Lemma(id),
    };
    execute(&cmd, &cfg, cli.threads)
}
