//! Experiment execution and artifact emission.
//!
//! Each subcommand body lives here as a plain function from a validated
//! [`ExperimentConfig`] to an exit code, so the whole CLI surface is
//! exercisable from tests without spawning processes. Artifact writers are
//! string builders with fixed headers; files land in `output.dir`.
//!
//! All output is deterministic: float cells use Rust's shortest
//! round-tripping display form, and rerunning a config byte-reproduces
//! every artifact.

use super::config::{ExperimentConfig, TopologySpec};
use super::HarnessError;
use crate::analysis::{audit_trace, certify, AuditReport, ConvergenceCertificate};
use crate::network::{combination_matrix, CombinationMatrix, Topology};
use crate::problem::{estimate_bounds_with_safety, make_problem, BoundsProfile, NlsProblem};
use crate::solvers::{run, Mode, RunTrace, SolverConfig, StopReason};
use nalgebra::DVector;
use serde::Serialize;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

pub const TRACE_FILE: &str = "trace.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CERTIFICATE_FILE: &str = "certificate.json";
pub const COMPARE_FILE: &str = "compare.csv";
pub const AUDIT_FILE: &str = "audit.csv";

// ---------------------------------------------------------------------------
// config -> runnable pieces
// ---------------------------------------------------------------------------

/// A config resolved into live objects, ready to run or certify.
pub struct Assembled {
    pub problem: NlsProblem,
    pub weights: CombinationMatrix,
    pub solver: SolverConfig,
    pub x0: DVector<f64>,
}

fn config_error(key: &str, message: impl std::fmt::Display) -> HarnessError {
    HarnessError::Validation {
        key: key.into(),
        message: message.to_string(),
    }
}

fn build_topology(spec: &TopologySpec, nodes: usize) -> Result<Topology, HarnessError> {
    let topology = match spec {
        TopologySpec::Complete => Topology::complete(nodes),
        TopologySpec::Ring => Topology::ring(nodes),
        TopologySpec::Path => Topology::path(nodes),
        TopologySpec::RandomGeometric { radius, seed } => {
            Topology::random_geometric(nodes, *radius, *seed)
        }
        TopologySpec::EdgeList { path } => {
            let text = fs::read_to_string(path).map_err(|source| HarnessError::Io {
                path: path.display().to_string(),
                source,
            })?;
            let topology =
                Topology::read_edge_list(&text).map_err(|e| config_error("topology.edge_file", e))?;
            if topology.node_count() != nodes {
                return Err(config_error(
                    "topology.edge_file",
                    format!(
                        "edge list has {} nodes, problem.nodes is {nodes}",
                        topology.node_count()
                    ),
                ));
            }
            return Ok(topology);
        }
    };
    topology.map_err(|e| config_error("topology", e))
}

/// Instantiates the problem, network, solver config, and initial block.
pub fn assemble(config: &ExperimentConfig) -> Result<Assembled, HarnessError> {
    let p = &config.problem;
    let problem = make_problem(p.kind, p.nodes, p.dim, p.noise, p.seed)
        .map_err(|e| config_error("problem", e))?;
    let topology = build_topology(&config.topology, p.nodes)?;
    let weights = combination_matrix(&topology, config.combine_rule);
    let s = &config.solver;
    let solver = SolverConfig::new(s.mode, s.alpha, s.max_iters, s.tol)
        .map_err(|e| config_error("solver", e))?
        .with_adapt_at(s.adapt_at);
    let x0 = problem
        .domain()
        .point_at(&s.x0_frac)
        .map_err(|e| config_error("solver.x0_frac", e))?;
    Ok(Assembled {
        problem,
        weights,
        solver,
        x0,
    })
}

fn bounds_for(config: &ExperimentConfig, problem: &NlsProblem) -> Result<BoundsProfile, HarnessError> {
    let a = &config.analysis;
    Ok(estimate_bounds_with_safety(
        problem, a.samples, a.seed, a.safety,
    )?)
}

// ---------------------------------------------------------------------------
// artifact writers
// ---------------------------------------------------------------------------

/// Renders a trace as CSV, one row per (iteration, node, component).
///
/// `iter` counts applied updates, so row 0 is the initial state. Node and
/// component indices are 1-based for spreadsheet friendliness. The
/// discrepancy column holds the norm of the cooperative-minus-individual
/// descent gap and is empty where the trace has no such pair (non-diffusion
/// modes and the final record).
pub fn trace_csv(trace: &RunTrace) -> String {
    let mut out = String::from("iter,node,comp_idx,estimate,node_error,global_error,discrepancy_norm\n");
    let m = trace.dim;
    for (iter, record) in trace.records.iter().enumerate() {
        let discrepancy = match (&record.cooperative_descent, &record.noncooperative_descent) {
            (Some(coop), Some(solo)) => format!("{}", (coop - solo).norm()),
            _ => String::new(),
        };
        for node in 0..trace.node_count {
            for comp in 0..m {
                let _ = writeln!(
                    out,
                    "{iter},{},{},{},{},{},{discrepancy}",
                    node + 1,
                    comp + 1,
                    record.state[node * m + comp],
                    record.node_errors[node],
                    record.global_error,
                );
            }
        }
    }
    out
}

#[derive(Serialize)]
struct RunSummary<'a> {
    mode: &'a str,
    iterations: usize,
    stop_reason: &'a str,
    final_global_error: f64,
    certificate_ref: Option<&'a str>,
}

/// Renders the run summary JSON; `certificate_ref` names the certificate
/// artifact when one was produced alongside the run.
pub fn summary_json(trace: &RunTrace, certificate_ref: Option<&str>) -> String {
    let summary = RunSummary {
        mode: trace.mode().as_str(),
        iterations: trace.iterations(),
        stop_reason: trace.stop_reason.as_str(),
        final_global_error: trace.final_global_error(),
        certificate_ref,
    };
    let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    text.push('\n');
    text
}

/// Renders the certificate as pretty JSON.
pub fn certificate_json(certificate: &ConvergenceCertificate) -> String {
    let mut text = serde_json::to_string_pretty(certificate).expect("certificate serializes");
    text.push('\n');
    text
}

/// Renders the three-mode comparison CSV with aligned iteration indices.
///
/// Each column holds that mode's global error at the iteration; cells go
/// empty once a mode has stopped.
pub fn compare_csv(
    centralized: &RunTrace,
    noncooperative: &RunTrace,
    diffusion: &RunTrace,
) -> String {
    let traces = [centralized, noncooperative, diffusion];
    let rows = traces.iter().map(|t| t.records.len()).max().unwrap_or(0);
    let mut out = String::from("iter,centralized,noncooperative,diffusion\n");
    for iter in 0..rows {
        let _ = write!(out, "{iter}");
        for trace in traces {
            match trace.records.get(iter) {
                Some(record) => {
                    let _ = write!(out, ",{}", record.global_error);
                }
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

/// Renders the audit report as CSV, one row per iteration per check.
pub fn audit_csv(report: &AuditReport) -> String {
    let mut out = String::from("iter,check,lhs,rhs,slack,pass\n");
    for row in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            row.iter, row.check, row.lhs, row.rhs, row.slack, row.pass
        );
    }
    out
}

fn write_artifact(dir: &Path, name: &str, content: &str) -> Result<PathBuf, HarnessError> {
    fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let path = dir.join(name);
    fs::write(&path, content).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })?;
    println!("wrote {}", path.display());
    Ok(path)
}

// ---------------------------------------------------------------------------
// subcommand bodies
// ---------------------------------------------------------------------------

fn report_certificate(certificate: &ConvergenceCertificate) {
    for (name, flag) in certificate.flags() {
        let verdict = if flag.pass { "pass" } else { "FAIL" };
        match flag.margin {
            Some(margin) => println!("  {name}: {verdict} (margin {margin:.3e})"),
            None => println!("  {name}: {verdict}"),
        }
    }
    let overall = if certificate.overall { "pass" } else { "FAIL" };
    println!("certificate overall: {overall}");
}

fn finish_run(trace: &RunTrace) -> i32 {
    println!(
        "{}: {} iterations, stop reason {}, final global error {:.3e}",
        trace.mode(),
        trace.iterations(),
        trace.stop_reason,
        trace.final_global_error()
    );
    if trace.stop_reason == StopReason::Singular {
        let detail = trace.failure.as_deref().unwrap_or("no detail recorded");
        eprintln!("numerical failure: {detail}");
        3
    } else {
        0
    }
}

/// `run`: execute the configured mode, writing trace and summary artifacts.
///
/// With `require_certified`, the instance is certified first and the run is
/// refused (exit 4) when the certificate fails overall.
pub fn run_command(config: &ExperimentConfig, require_certified: bool) -> Result<i32, HarnessError> {
    let parts = assemble(config)?;
    let dir = &config.output_dir;
    let mut certificate_ref = None;
    if require_certified {
        let bounds = bounds_for(config, &parts.problem)?;
        let horizon = config.analysis.effective_horizon(config.solver.max_iters);
        let certificate = certify(
            &parts.problem,
            &parts.weights,
            &parts.solver,
            &parts.x0,
            horizon,
            &bounds,
        )?;
        write_artifact(dir, CERTIFICATE_FILE, &certificate_json(&certificate))?;
        report_certificate(&certificate);
        if !certificate.overall {
            eprintln!("refusing to run: certificate failed and --require-certified is set");
            return Ok(4);
        }
        certificate_ref = Some(CERTIFICATE_FILE);
    }
    let trace = run(&parts.problem, &parts.weights, &parts.solver, &parts.x0)?;
    write_artifact(dir, TRACE_FILE, &trace_csv(&trace))?;
    write_artifact(dir, SUMMARY_FILE, &summary_json(&trace, certificate_ref))?;
    Ok(finish_run(&trace))
}

/// `certify`: evaluate the convergence certificate and write it as JSON.
///
/// Exit 4 on overall failure only when `require_certified` is set; plain
/// certification reports the verdict and exits 0 either way.
pub fn certify_command(
    config: &ExperimentConfig,
    require_certified: bool,
) -> Result<i32, HarnessError> {
    let parts = assemble(config)?;
    let bounds = bounds_for(config, &parts.problem)?;
    let horizon = config.analysis.effective_horizon(config.solver.max_iters);
    let certificate = certify(
        &parts.problem,
        &parts.weights,
        &parts.solver,
        &parts.x0,
        horizon,
        &bounds,
    )?;
    write_artifact(&config.output_dir, CERTIFICATE_FILE, &certificate_json(&certificate))?;
    report_certificate(&certificate);
    if !certificate.overall && require_certified {
        return Ok(4);
    }
    Ok(0)
}

/// `compare`: run all three modes from the identical start and write the
/// joined error-per-iteration CSV.
pub fn compare_command(config: &ExperimentConfig) -> Result<i32, HarnessError> {
    let parts = assemble(config)?;
    let mut traces = Vec::with_capacity(3);
    for mode in [Mode::Centralized, Mode::NonCooperative, Mode::Diffusion] {
        let solver = SolverConfig {
            mode,
            ..parts.solver.clone()
        };
        let trace = run(&parts.problem, &parts.weights, &solver, &parts.x0)?;
        println!(
            "{}: {} iterations, stop reason {}, final global error {:.3e}",
            mode,
            trace.iterations(),
            trace.stop_reason,
            trace.final_global_error()
        );
        traces.push(trace);
    }
    write_artifact(
        &config.output_dir,
        COMPARE_FILE,
        &compare_csv(&traces[0], &traces[1], &traces[2]),
    )?;
    let failed: Vec<&RunTrace> = traces
        .iter()
        .filter(|t| t.stop_reason == StopReason::Singular)
        .collect();
    for trace in &failed {
        let detail = trace.failure.as_deref().unwrap_or("no detail recorded");
        eprintln!("numerical failure in {} mode: {detail}", trace.mode());
    }
    Ok(if failed.is_empty() { 0 } else { 3 })
}

fn report_audit(report: &AuditReport) {
    let failures = report.failures().len();
    if report.all_pass {
        println!(
            "audit: {} rows over {} iterations, all primary checks pass",
            report.rows.len(),
            report.iterations
        );
    } else {
        println!(
            "audit: {} rows over {} iterations, {failures} FAILED",
            report.rows.len(),
            report.iterations
        );
    }
}

/// `audit`: run, certify, and audit the configured diffusion experiment in
/// one pass, writing all four artifacts.
///
/// Audit rows are measurements, not gates: failed checks land in the CSV
/// without changing the exit code. Only `require_certified` gates (exit 4,
/// before the run), and numerical failure still exits 3.
pub fn audit_command(config: &ExperimentConfig, require_certified: bool) -> Result<i32, HarnessError> {
    if config.solver.mode != Mode::Diffusion {
        return Err(config_error(
            "solver.mode",
            "audit requires solver.mode = diffusion",
        ));
    }
    let parts = assemble(config)?;
    let dir = &config.output_dir;
    let bounds = bounds_for(config, &parts.problem)?;
    let horizon = config.analysis.effective_horizon(config.solver.max_iters);
    let certificate = certify(
        &parts.problem,
        &parts.weights,
        &parts.solver,
        &parts.x0,
        horizon,
        &bounds,
    )?;
    write_artifact(dir, CERTIFICATE_FILE, &certificate_json(&certificate))?;
    report_certificate(&certificate);
    if !certificate.overall && require_certified {
        eprintln!("refusing to audit: certificate failed and --require-certified is set");
        return Ok(4);
    }
    let trace = run(&parts.problem, &parts.weights, &parts.solver, &parts.x0)?;
    write_artifact(dir, TRACE_FILE, &trace_csv(&trace))?;
    if trace.stop_reason == StopReason::Singular {
        return Ok(finish_run(&trace));
    }
    let report = audit_trace(&parts.problem, &trace, &certificate, &parts.weights, &bounds)?;
    write_artifact(dir, AUDIT_FILE, &audit_csv(&report))?;
    write_artifact(dir, SUMMARY_FILE, &summary_json(&trace, Some(CERTIFICATE_FILE)))?;
    report_audit(&report);
    Ok(finish_run(&trace))
}

// ---------------------------------------------------------------------------
