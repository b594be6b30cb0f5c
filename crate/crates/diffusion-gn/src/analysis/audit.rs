//! Replay of recorded traces against the inequalities the theory asserts.
//!
//! Where the certificate argues from worst-case constants that a run will
//! behave, the audit takes a run that actually happened and measures every
//! bound along it: the error recursion, the descent-discrepancy bound, the
//! pairwise gap envelopes, the normal-matrix perturbation condition, and
//! the aggregate-driven behavior recursion. Each check becomes one row per
//! iteration with its measured left- and right-hand sides, so a failure
//! pinpoints both the iteration and the inequality that broke.

use super::certificate::ConvergenceCertificate;
use super::constants::pi_sequence;
use super::AnalysisError;
use crate::network::CombinationMatrix;
use crate::problem::{BoundsProfile, NlsProblem};
use crate::solvers::{normal_system_at_blocks, normal_system_at_point, AdaptAt, Mode, RunTrace};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// The inequalities measured along a trace.
///
/// All but [`AuditCheck::RecursionAlternate`] are primary: they must hold
/// on a certified instance and participate in the overall verdict. The
/// alternate recursion uses a looser coefficient set stated against the
/// Frobenius norm and the measured descent gap; it is tracked purely for
/// side-by-side comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditCheck {
    /// `e_{i+1} <= t1 g^2 e_i^2 + t2 g e_i + alpha xi`.
    ErrorRecursion,
    /// `|D_i - d_i| <= xi`: cooperative vs non-cooperative descent gap.
    DescentGap,
    /// `max pairs |x_l - x_k| <= Pi^i`.
    NodeGap,
    /// `max pairs |X_l - x_k| <= N Pi^i` with `X` the aggregates.
    AggregateGap,
    /// `|[Q_k(x_k)]^-1 (Q_k(X) - Q_k(x_k))| < 1` at every node.
    NormalPerturbation,
    /// `e_{i+1} <= (1 + alpha gamma_f |L| |O|) |G x_i - x*|` with `L` the
    /// stacked inverse normal matrices at the aggregates and `O` the
    /// neighborhood-selection operator.
    BehaviorRecursion,
    /// `e_{i+1} <= t1 e_i^2 + (t2 + |G|_F + 1) e_i + alpha |D_i - d_i|`.
    RecursionAlternate,
}

impl AuditCheck {
    /// Report order of the checks.
    pub const ALL: [AuditCheck; 7] = [
        AuditCheck::ErrorRecursion,
        AuditCheck::DescentGap,
        AuditCheck::NodeGap,
        AuditCheck::AggregateGap,
        AuditCheck::NormalPerturbation,
        AuditCheck::BehaviorRecursion,
        AuditCheck::RecursionAlternate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AuditCheck::ErrorRecursion => "error_recursion",
            AuditCheck::DescentGap => "descent_gap",
            AuditCheck::NodeGap => "node_gap",
            AuditCheck::AggregateGap => "aggregate_gap",
            AuditCheck::NormalPerturbation => "normal_perturbation",
            AuditCheck::BehaviorRecursion => "behavior_recursion",
            AuditCheck::RecursionAlternate => "recursion_alternate",
        }
    }

    /// Whether the check participates in the overall verdict.
    pub fn is_primary(self) -> bool {
        !matches!(self, AuditCheck::RecursionAlternate)
    }
}

impl std::fmt::Display for AuditCheck {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One measured inequality at one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    /// Index of the iteration the step started from.
    pub iter: usize,
    pub check: AuditCheck,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`; negative exactly when the check failed.
    pub slack: f64,
    pub pass: bool,
}

/// Every measured inequality along a trace, with the overall verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub rows: Vec<AuditRow>,
    /// Number of audited steps.
    pub iterations: usize,
    /// Conjunction over all primary rows.
    pub all_pass: bool,
    /// Largest measured descent gap `|D_i - d_i|` along the trace.
    pub max_descent_gap: f64,
    /// The bound the gap was measured against.
    pub xi: f64,
}

impl AuditReport {
    /// Primary rows that failed, in trace order.
    pub fn failures(&self) -> Vec<&AuditRow> {
        self.rows
            .iter()
            .filter(|row| row.check.is_primary() && !row.pass)
            .collect()
    }
}

fn push_row(rows: &mut Vec<AuditRow>, iter: usize, check: AuditCheck, lhs: f64, rhs: f64, strict: bool) {
    let pass = if strict { lhs < rhs } else { lhs <= rhs };
    rows.push(AuditRow {
        iter,
        check,
        lhs,
        rhs,
        slack: rhs - lhs,
        pass,
    });
}

fn spectral_top(matrix: &DMatrix<f64>) -> f64 {
    matrix.clone().svd(false, false).singular_values[0]
}

fn smallest_eigenvalue(matrix: &DMatrix<f64>, node: usize) -> Result<f64, AnalysisError> {
    let eigen = matrix.clone().symmetric_eigen();
    let smallest = eigen.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if smallest <= 0.0 {
        return Err(AnalysisError::BadInput(format!(
            "normal matrix at node {node} is not positive definite during audit"
        )));
    }
    Ok(smallest)
}

/// Measures every inequality along a recorded cooperative run.
///
/// The trace must come from the diffusion solver with its shadow descents
/// and aggregates recorded, and must have been run with the same step size
/// the certificate was issued for. The gap envelope is re-extended to the
/// trace length when the run outlived the certificate horizon, so a longer
/// trace is audited in full rather than truncated.
pub fn audit_trace(
    problem: &NlsProblem,
    trace: &RunTrace,
    certificate: &ConvergenceCertificate,
    weights: &CombinationMatrix,
    bounds: &BoundsProfile,
) -> Result<AuditReport, AnalysisError> {
    if trace.mode() != Mode::Diffusion {
        return Err(AnalysisError::TraceIncomplete(format!(
            "audit requires a diffusion trace, got mode {}",
            trace.mode()
        )));
    }
    if trace.records.len() < 2 {
        return Err(AnalysisError::TraceIncomplete(
            "trace records no completed steps".into(),
        ));
    }
    let n = trace.node_count;
    let m = trace.dim;
    if n != problem.node_count() || m != problem.dim() || n != weights.node_count() {
        return Err(AnalysisError::BadInput(format!(
            "trace shape ({n} nodes, dim {m}) does not match the problem and network"
        )));
    }
    let alpha = trace.config.alpha;
    if alpha != certificate.constants.alpha {
        return Err(AnalysisError::BadInput(format!(
            "trace step size {alpha} differs from the certified step size {}",
            certificate.constants.alpha
        )));
    }
    let xi = certificate.constants.xi.ok_or_else(|| {
        AnalysisError::BadInput("certificate carries no descent-discrepancy bound".into())
    })?;

    let g = certificate.diagnostics.g_spectral;
    let g_frobenius = certificate.diagnostics.g_frobenius;
    let t1 = certificate.constants.t1;
    let t2 = certificate.constants.t2;
    let gamma_f = bounds.gradient_lipschitz;
    let steps = trace.records.len() - 1;
    let pi = pi_sequence(certificate.constants.a1_max, certificate.constants.a2_max, steps);

    let topology = weights.topology();
    let omega_norm = ((0..n)
        .map(|l| topology.neighborhood_size(l))
        .max()
        .expect("at least one node") as f64)
        .sqrt();
    let minimizer_stack = DVector::from_fn(n * m, |idx, _| problem.minimizer()[idx % m]);

    let mut rows = Vec::with_capacity(steps * AuditCheck::ALL.len());
    let mut max_descent_gap = 0.0f64;

    for i in 0..steps {
        let record = &trace.records[i];
        let next = &trace.records[i + 1];
        let missing = |what: &str| {
            AnalysisError::TraceIncomplete(format!("record {i} lacks the {what}"))
        };
        let aggregate = record.aggregate.as_ref().ok_or_else(|| missing("aggregate"))?;
        let cooperative = record
            .cooperative_descent
            .as_ref()
            .ok_or_else(|| missing("cooperative descent"))?;
        let noncooperative = record
            .noncooperative_descent
            .as_ref()
            .ok_or_else(|| missing("shadow non-cooperative descent"))?;

        let e_i = record.global_error;
        let e_next = next.global_error;

        push_row(
            &mut rows,
            i,
            AuditCheck::ErrorRecursion,
            e_next,
            t1 * g * g * e_i * e_i + t2 * g * e_i + alpha * xi,
            false,
        );

        let gap = (cooperative - noncooperative).norm();
        max_descent_gap = max_descent_gap.max(gap);
        push_row(&mut rows, i, AuditCheck::DescentGap, gap, xi, false);

        let mut node_gap = 0.0f64;
        for k in 0..n {
            for l in (k + 1)..n {
                let diff = record.state.rows(l * m, m) - record.state.rows(k * m, m);
                node_gap = node_gap.max(diff.norm());
            }
        }
        push_row(&mut rows, i, AuditCheck::NodeGap, node_gap, pi[i], false);

        let mut aggregate_gap = 0.0f64;
        for l in 0..n {
            for k in 0..n {
                let diff = aggregate.rows(l * m, m) - record.state.rows(k * m, m);
                aggregate_gap = aggregate_gap.max(diff.norm());
            }
        }
        push_row(
            &mut rows,
            i,
            AuditCheck::AggregateGap,
            aggregate_gap,
            n as f64 * pi[i],
            false,
        );

        let mut perturbation = 0.0f64;
        let mut lambda_norm = 0.0f64;
        for k in 0..n {
            let members = topology.neighbors(k);
            let own = record.state.rows(k * m, m).into_owned();
            let (q_own, _) = normal_system_at_point(problem, members, &own)?;
            let q_agg = match trace.config.adapt_at {
                AdaptAt::NeighborAggregates => {
                    normal_system_at_blocks(problem, members, aggregate)?.0
                }
                AdaptAt::OwnAggregate => {
                    let own_aggregate = aggregate.rows(k * m, m).into_owned();
                    normal_system_at_point(problem, members, &own_aggregate)?.0
                }
            };
            let perturbed = &q_agg - &q_own;
            let inverse = q_own.clone().try_inverse().ok_or_else(|| {
                AnalysisError::BadInput(format!(
                    "normal matrix at node {k} is singular during audit"
                ))
            })?;
            perturbation = perturbation.max(spectral_top(&(inverse * perturbed)));
            lambda_norm = lambda_norm.max(1.0 / smallest_eigenvalue(&q_agg, k)?);
        }
        push_row(
            &mut rows,
            i,
            AuditCheck::NormalPerturbation,
            perturbation,
            1.0,
            true,
        );

        let driven = (aggregate - &minimizer_stack).norm();
        push_row(
            &mut rows,
            i,
            AuditCheck::BehaviorRecursion,
            e_next,
            (1.0 + alpha * gamma_f * lambda_norm * omega_norm) * driven,
            false,
        );

        push_row(
            &mut rows,
            i,
            AuditCheck::RecursionAlternate,
            e_next,
            t1 * e_i * e_i + (t2 + g_frobenius + 1.0) * e_i + alpha * gap,
            false,
        );
    }

    let all_pass = rows
        .iter()
        .filter(|row| row.check.is_primary())
        .all(|row| row.pass);
    Ok(AuditReport {
        rows,
        iterations: steps,
        all_pass,
        max_descent_gap,
        xi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::certify;
    use crate::network::{combination_matrix, Topology, WeightRule};
    use crate::problem::{estimate_bounds_with_safety, make_problem, ProblemKind};
    use crate::solvers::{run, SolverConfig};

    fn certified_run(
        max_iters: usize,
        horizon: usize,
    ) -> (
        NlsProblem,
        CombinationMatrix,
        RunTrace,
        ConvergenceCertificate,
        BoundsProfile,
    ) {
        let problem = make_problem(ProblemKind::Localization, 6, 2, 0.01, 31).unwrap();
        let topology = Topology::complete(6).unwrap();
        let weights = combination_matrix(&topology, WeightRule::Uniform);
        let config = SolverConfig::new(Mode::Diffusion, 0.02, max_iters, 0.0).unwrap();
        let x0 = problem.domain().point_at(&[0.9, 0.9]).unwrap();
        let bounds = estimate_bounds_with_safety(&problem, 200, 11, 1.005).unwrap();
        let certificate = certify(&problem, &weights, &config, &x0, horizon, &bounds).unwrap();
        let trace = run(&problem, &weights, &config, &x0).unwrap();
        (problem, weights, trace, certificate, bounds)
    }

    #[test]
    fn certified_instance_audits_clean_for_fifty_iterations() {
        let (problem, weights, trace, certificate, bounds) = certified_run(50, 50);
        assert!(certificate.overall, "instance must certify before auditing");
        let report = audit_trace(&problem, &trace, &certificate, &weights, &bounds).unwrap();
        assert_eq!(report.iterations, 50);
        assert!(report.all_pass, "failures: {:?}", report.failures());
        for row in &report.rows {
            if row.check.is_primary() {
                assert!(
                    row.slack >= 0.0,
                    "negative slack on {} at iteration {}",
                    row.check,
                    row.iter
                );
            }
        }
        assert!(report.max_descent_gap <= report.xi);
    }

    #[test]
    fn traces_longer_than_the_horizon_are_audited_in_full() {
        let (problem, weights, trace, certificate, bounds) = certified_run(60, 50);
        let report = audit_trace(&problem, &trace, &certificate, &weights, &bounds).unwrap();
        assert_eq!(report.iterations, 60);
        let last_gap = report
            .rows
            .iter()
            .filter(|row| row.check == AuditCheck::NodeGap)
            .map(|row| row.iter)
            .max()
            .unwrap();
        assert_eq!(last_gap, 59, "gap rows must extend past the horizon");
    }

    #[test]
    fn non_diffusion_traces_are_rejected() {
        let problem = make_problem(ProblemKind::Localization, 6, 2, 0.01, 31).unwrap();
        let topology = Topology::complete(6).unwrap();
        let weights = combination_matrix(&topology, WeightRule::Uniform);
        let config = SolverConfig::new(Mode::Centralized, 0.02, 10, 0.0).unwrap();
        let x0 = problem.domain().point_at(&[0.9, 0.9]).unwrap();
        let bounds = estimate_bounds_with_safety(&problem, 120, 11, 1.005).unwrap();
        let diffusion = SolverConfig::new(Mode::Diffusion, 0.02, 10, 0.0).unwrap();
        let certificate = certify(&problem, &weights, &diffusion, &x0, 10, &bounds).unwrap();
        let trace = run(&problem, &weights, &config, &x0).unwrap();
        assert!(matches!(
            audit_trace(&problem, &trace, &certificate, &weights, &bounds),
            Err(AnalysisError::TraceIncomplete(_))
        ));
    }

    #[test]
    fn step_size_mismatch_with_the_certificate_is_rejected() {
        let (problem, weights, _, certificate, bounds) = certified_run(10, 10);
        let other = SolverConfig::new(Mode::Diffusion, 0.05, 10, 0.0).unwrap();
        let x0 = problem.domain().point_at(&[0.9, 0.9]).unwrap();
        let trace = run(&problem, &weights, &other, &x0).unwrap();
        assert!(matches!(
            audit_trace(&problem, &trace, &certificate, &weights, &bounds),
            Err(AnalysisError::BadInput(_))
        ));
    }

    #[test]
    fn identity_weights_zero_the_perturbation_and_gap_measurements() {
        use crate::solvers::AdaptAt;
        let problem = make_problem(ProblemKind::Localization, 4, 2, 0.01, 13).unwrap();
        let topology = Topology::ring(4).unwrap();
        let weights = CombinationMatrix::identity(&topology);
        // Identity mixing leaves each node at its own state, so with the
        // adaptation terms taken at the node's own aggregate the perturbed
        // and unperturbed normal matrices coincide exactly.
        let config = SolverConfig::new(Mode::Diffusion, 0.05, 8, 0.0)
            .unwrap()
            .with_adapt_at(AdaptAt::OwnAggregate);
        let x0 = problem.domain().point_at(&[0.7, 0.4]).unwrap();
        let bounds = estimate_bounds_with_safety(&problem, 120, 3, 1.01).unwrap();
        let certificate = certify(&problem, &weights, &config, &x0, 8, &bounds).unwrap();
        let trace = run(&problem, &weights, &config, &x0).unwrap();
        let report = audit_trace(&problem, &trace, &certificate, &weights, &bounds).unwrap();
        for row in &report.rows {
            match row.check {
                AuditCheck::NormalPerturbation => {
                    assert_eq!(row.lhs, 0.0, "identity mixing leaves no perturbation")
                }
                AuditCheck::DescentGap => {
                    assert_eq!(row.lhs, 0.0, "identity mixing makes both descents equal")
                }
                _ => {}
            }
        }
    }
}
