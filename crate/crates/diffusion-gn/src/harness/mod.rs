//! Experiment orchestration: config files, command execution, artifacts.
//!
//! The harness turns a flat-text config file into a full experiment:
//!
//! * `run` executes the configured solver mode and writes `trace.csv` plus
//!   `summary.json`;
//! * `certify` evaluates the convergence certificate into
//!   `certificate.json`;
//! * `compare` runs centralized, non-cooperative, and diffusion modes from
//!   the identical start and writes a joined `compare.csv`;
//! * `audit` runs, certifies, and audits in one pass;
//! * `gen-config` emits a commented template that parses back unchanged.
//!
//! Exit codes: 0 success, 2 config error (parse, validation, I/O), 3
//! numerical failure, 4 certificate overall-fail under
//! `--require-certified`. Every artifact is deterministic in the config
//! file: rerunning a config byte-reproduces it.

mod commands;
mod config;

pub use commands::{
    assemble, audit_command, audit_csv, certificate_json, certify_command, compare_command,
    compare_csv, run_command, summary_json, trace_csv, Assembled, AUDIT_FILE, CERTIFICATE_FILE,
    COMPARE_FILE, SUMMARY_FILE, TRACE_FILE,
};
pub use config::{
    load_config, parse_config, template_config, to_config_text, AnalysisSpec, ExperimentConfig,
    ProblemSpec, SolverSpec, TopologySpec,
};

use clap::{Parser, Subcommand};
use std::ffi::OsString;
use std::path::PathBuf;
use thiserror::Error;

/// Failures surfaced by config handling and experiment execution.
#[derive(Debug, Error)]
pub enum HarnessError {
    /// Structurally broken config line.
    #[error("config parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    /// A key is missing, unknown, or carries an out-of-range value.
    #[error("invalid config value for '{key}': {message}")]
    Validation { key: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Problem(#[from] crate::problem::ProblemError),
    #[error(transparent)]
    Network(#[from] crate::network::NetworkError),
    #[error(transparent)]
    Solver(#[from] crate::solvers::SolverError),
    #[error(transparent)]
    Analysis(#[from] crate::analysis::AnalysisError),
}

impl HarnessError {
    /// The process exit code this failure maps to: 2 for config problems,
    /// 3 for numerical ones.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Parse { .. }
            | HarnessError::Validation { .. }
            | HarnessError::Io { .. } => 2,
            HarnessError::Problem(_)
            | HarnessError::Network(_)
            | HarnessError::Solver(_)
            | HarnessError::Analysis(_) => 3,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "diffusion-gn",
    about = "Distributed Gauss-Newton experiments with convergence certification",
    disable_help_subcommand = true
)]
struct CliArgs {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Execute the configured solver mode; writes trace.csv and summary.json.
    Run {
        /// Experiment config file.
        config: PathBuf,
        /// Certify first and refuse to run unless the certificate passes.
        #[arg(long)]
        require_certified: bool,
    },
    /// Evaluate the convergence certificate; writes certificate.json.
    Certify {
        /// Experiment config file.
        config: PathBuf,
        /// Exit 4 when the certificate fails overall.
        #[arg(long)]
        require_certified: bool,
    },
    /// Run all three modes from one start; writes compare.csv.
    Compare {
        /// Experiment config file.
        config: PathBuf,
    },
    /// Run, certify, and audit a diffusion experiment in one pass.
    Audit {
        /// Experiment config file.
        config: PathBuf,
        /// Certify first and refuse to audit unless the certificate passes.
        #[arg(long)]
        require_certified: bool,
    },
    /// Emit a commented config template (stdout, or --out FILE).
    GenConfig {
        /// Write the template here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Full command-line entry point; returns the process exit code.
///
/// `argv` is the complete argument vector including the program name, so
/// `cli(std::env::args())` is the whole of `main`.
pub fn cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match CliArgs::try_parse_from(argv) {
        Ok(args) => args,
        Err(error) => {
            // Help and version requests are not failures.
            let code = if error.use_stderr() { 2 } else { 0 };
            let _ = error.print();
            return code;
        }
    };
    let outcome = match args.command {
        CliCommand::Run {
            config,
            require_certified,
        } => load_config(config).and_then(|c| run_command(&c, require_certified)),
        CliCommand::Certify {
            config,
            require_certified,
        } => load_config(config).and_then(|c| certify_command(&c, require_certified)),
        CliCommand::Compare { config } => load_config(config).and_then(|c| compare_command(&c)),
        CliCommand::Audit {
            config,
            require_certified,
        } => load_config(config).and_then(|c| audit_command(&c, require_certified)),
        CliCommand::GenConfig { out } => gen_config_command(out),
    };
    match outcome {
        Ok(code) => code,
        Err(error) => {
            eprintln!("error: {error}");
            error.exit_code()
        }
    }
}

fn gen_config_command(out: Option<PathBuf>) -> Result<i32, HarnessError> {
    let text = to_config_text(&template_config());
    match out {
        Some(path) => {
            std::fs::write(&path, &text).map_err(|source| HarnessError::Io {
                path: path.display().to_string(),
                source,
            })?;
            println!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(0)
}
