//! Gauss-Newton iterations over the network.
//!
//! Three strategies share one computational core:
//!
//! * centralized: one estimate driven by all nodes' data,
//!   `x+ = x - alpha [sum_k F_k'F_k]^{-1} sum_k F_k'f_k`, all terms at `x`;
//! * non-cooperative: node `k` keeps its own estimate and uses its
//!   neighborhood's data, every term evaluated at `x_k`;
//! * cooperative diffusion: a combine phase forms the aggregate
//!   `agg_k = sum_l c_kl x_l`, then an adapt phase applies a Gauss-Newton
//!   correction built from the neighborhood's data evaluated at the
//!   neighbors' aggregates,
//!   `x_k+ = agg_k - alpha [Q_k]^{-1} q_k`.
//!
//! One iteration of the diffusion strategy is a synchronous round with two
//! message exchanges: raw estimates for the combine phase, then aggregated
//! estimates for the adapt phase (the adapt sums need neighbors' aggregates,
//! which is 2-hop information). All per-node sums run in ascending neighbor
//! order, so traces are bit-reproducible regardless of scheduling.

use crate::network::{CombinationMatrix, NetworkError, Topology};
use crate::problem::{NlsProblem, ProblemError};
use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

/// Condition-number ceiling for the per-node normal solves.
const CONDITION_LIMIT: f64 = 1e12;

/// Errors raised by solver configuration and stepping.
#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    BadConfig(String),
    #[error("invalid initial estimate: {0}")]
    BadInitial(String),
    #[error("normal matrix{} is singular or ill-conditioned (condition {condition:.3e})", node_label(.node))]
    SingularNormalMatrix { node: Option<usize>, condition: f64 },
    #[error("iterate{} left the search domain: {detail}", node_label(.node))]
    OutOfDomain { node: Option<usize>, detail: String },
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

fn node_label(node: &Option<usize>) -> String {
    match node {
        Some(k) => format!(" at node {k}"),
        None => String::new(),
    }
}

/// Which estimation strategy a run executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Centralized,
    NonCooperative,
    Diffusion,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Centralized => "centralized",
            Mode::NonCooperative => "noncooperative",
            Mode::Diffusion => "diffusion",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "centralized" => Ok(Mode::Centralized),
            "noncooperative" => Ok(Mode::NonCooperative),
            "diffusion" => Ok(Mode::Diffusion),
            other => Err(format!(
                "unknown mode '{other}' (expected centralized, noncooperative, or diffusion)"
            )),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where the diffusion adapt phase evaluates neighbor contributions.
///
/// The update rule as written evaluates neighbor `l`'s residual and Jacobian
/// at `l`'s own aggregate. Whether that was intended over evaluating
/// everything at node `k`'s aggregate is ambiguous in the source material,
/// so both are offered; the literal reading is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AdaptAt {
    #[default]
    NeighborAggregates,
    OwnAggregate,
}

impl AdaptAt {
    pub fn as_str(self) -> &'static str {
        match self {
            AdaptAt::NeighborAggregates => "neighbor_aggregates",
            AdaptAt::OwnAggregate => "own_aggregate",
        }
    }
}

impl std::str::FromStr for AdaptAt {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "neighbor_aggregates" => Ok(AdaptAt::NeighborAggregates),
            "own_aggregate" => Ok(AdaptAt::OwnAggregate),
            other => Err(format!(
                "unknown adapt point '{other}' (expected neighbor_aggregates or own_aggregate)"
            )),
        }
    }
}

impl std::fmt::Display for AdaptAt {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Validated run parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub mode: Mode,
    pub alpha: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub adapt_at: AdaptAt,
}

impl SolverConfig {
    pub fn new(mode: Mode, alpha: f64, max_iters: usize, tol: f64) -> Result<Self, SolverError> {
        let config = Self {
            mode,
            alpha,
            max_iters,
            tol,
            adapt_at: AdaptAt::default(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_adapt_at(mut self, adapt_at: AdaptAt) -> Self {
        self.adapt_at = adapt_at;
        self
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if !self.alpha.is_finite() || self.alpha <= 0.0 || self.alpha > 1.0 {
            return Err(SolverError::BadConfig(format!(
                "step size must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        if self.max_iters == 0 {
            return Err(SolverError::BadConfig(
                "iteration budget must be at least 1".into(),
            ));
        }
        if !self.tol.is_finite() || self.tol < 0.0 {
            return Err(SolverError::BadConfig(format!(
                "tolerance must be finite and nonnegative, got {}",
                self.tol
            )));
        }
        Ok(())
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Step norm fell to the tolerance.
    Tolerance,
    /// Iteration budget exhausted.
    MaxIterations,
    /// A step failed numerically (singular normal matrix or an iterate
    /// leaving the domain); details in the trace failure message.
    Singular,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Tolerance => "tol",
            StopReason::MaxIterations => "max_iters",
            StopReason::Singular => "singular",
        }
    }
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One recorded network state.
///
/// The optional per-step fields describe the step taken *from* this state
/// and are absent on the final record (no step leaves it). In diffusion
/// mode the non-cooperative descent at the same state is recorded as a
/// shadow diagnostic, so the cooperative/non-cooperative descent gap is
/// observable from the trace alone.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    /// Stacked estimates, node-major.
    pub state: DVector<f64>,
    /// Stacked combine-phase aggregates (diffusion only).
    pub aggregate: Option<DVector<f64>>,
    /// Stacked cooperative descent (diffusion only).
    pub cooperative_descent: Option<DVector<f64>>,
    /// Stacked non-cooperative descent: the applied descent in
    /// non-cooperative mode, the shadow diagnostic in diffusion mode.
    pub noncooperative_descent: Option<DVector<f64>>,
    /// Per-node distances to the minimizer.
    pub node_errors: Vec<f64>,
    /// Stacked distance to the minimizer stack; its square is the sum of
    /// squared node errors.
    pub global_error: f64,
}

/// Full history of one run.
#[derive(Debug, Clone)]
pub struct RunTrace {
    /// The configuration that produced the trace; audits need the step size
    /// and adapt point to reconstruct per-iteration quantities.
    pub config: SolverConfig,
    pub node_count: usize,
    pub dim: usize,
    /// The minimizer the errors are measured against.
    pub minimizer: DVector<f64>,
    /// Record `i` is the state after `i` updates; record 0 is the start.
    pub records: Vec<IterationRecord>,
    pub stop_reason: StopReason,
    /// Human-readable failure description when `stop_reason` is `Singular`.
    pub failure: Option<String>,
}

impl RunTrace {
    pub fn mode(&self) -> Mode {
        self.config.mode
    }

    /// Number of updates performed (one less than the record count).
    pub fn iterations(&self) -> usize {
        self.records.len() - 1
    }

    pub fn final_global_error(&self) -> f64 {
        self.records.last().expect("trace has records").global_error
    }

    pub fn global_errors(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.global_error).collect()
    }

    /// Node `k`'s estimate block in record `i`.
    pub fn node_state(&self, i: usize, k: usize) -> DVector<f64> {
        self.records[i]
            .state
            .rows(k * self.dim, self.dim)
            .into_owned()
    }
}

// ---------------------------------------------------------------------------
// computational core
// ---------------------------------------------------------------------------

/// Accumulates the Gauss-Newton normal system for the listed member nodes,
/// all residuals and Jacobian rows evaluated at one common point.
pub fn normal_system_at_point(
    problem: &NlsProblem,
    members: &[usize],
    point: &DVector<f64>,
) -> Result<(DMatrix<f64>, DVector<f64>), SolverError> {
    let m = problem.dim();
    let mut normal = DMatrix::zeros(m, m);
    let mut gradient = DVector::zeros(m);
    for &node in members {
        let row = problem.jacobian_row(node, point)?;
        let value = problem.residual(node, point)?;
        accumulate(&mut normal, &mut gradient, &row, value);
    }
    Ok((normal, gradient))
}

/// Accumulates the Gauss-Newton normal system for the listed member nodes,
/// member `l` evaluated at block `l` of the stacked points.
pub fn normal_system_at_blocks(
    problem: &NlsProblem,
    members: &[usize],
    stacked: &DVector<f64>,
) -> Result<(DMatrix<f64>, DVector<f64>), SolverError> {
    let m = problem.dim();
    if stacked.len() != problem.node_count() * m {
        return Err(SolverError::BadConfig(format!(
            "stacked points have length {}, expected {}",
            stacked.len(),
            problem.node_count() * m
        )));
    }
    let mut normal = DMatrix::zeros(m, m);
    let mut gradient = DVector::zeros(m);
    for &node in members {
        let point = stacked.rows(node * m, m).into_owned();
        let row = problem.jacobian_row(node, &point)?;
        let value = problem.residual(node, &point)?;
        accumulate(&mut normal, &mut gradient, &row, value);
    }
    Ok((normal, gradient))
}

fn accumulate(
    normal: &mut DMatrix<f64>,
    gradient: &mut DVector<f64>,
    row: &nalgebra::RowDVector<f64>,
    value: f64,
) {
    let m = gradient.len();
    for a in 0..m {
        for b in 0..m {
            normal[(a, b)] += row[a] * row[b];
        }
        gradient[a] += row[a] * value;
    }
}

/// Solves the symmetric positive-definite normal system with a
/// condition-number guard.
pub fn solve_normal_system(
    normal: &DMatrix<f64>,
    gradient: &DVector<f64>,
    node: Option<usize>,
) -> Result<DVector<f64>, SolverError> {
    let eigen = SymmetricEigen::new(normal.clone());
    let lambda_min = eigen.eigenvalues.min();
    let lambda_max = eigen.eigenvalues.max();
    if lambda_min <= 0.0 {
        return Err(SolverError::SingularNormalMatrix {
            node,
            condition: f64::INFINITY,
        });
    }
    let condition = lambda_max / lambda_min;
    if condition > CONDITION_LIMIT {
        return Err(SolverError::SingularNormalMatrix { node, condition });
    }
    let factor = Cholesky::new(normal.clone()).ok_or(SolverError::SingularNormalMatrix {
        node,
        condition,
    })?;
    Ok(factor.solve(gradient))
}

fn check_alpha(alpha: f64) -> Result<(), SolverError> {
    if !alpha.is_finite() || !(0.0..=1.0).contains(&alpha) {
        return Err(SolverError::BadConfig(format!(
            "step size must lie in [0, 1] for a single step, got {alpha}"
        )));
    }
    Ok(())
}

/// `base - alpha * direction`, the one arithmetic path every mode uses so
/// that equal inputs give bit-equal updates.
fn apply_step(base: &DVector<f64>, alpha: f64, direction: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(base.len(), |i, _| base[i] - alpha * direction[i])
}

fn check_in_domain(
    problem: &NlsProblem,
    point: &DVector<f64>,
    node: Option<usize>,
) -> Result<(), SolverError> {
    problem
        .domain()
        .check(point)
        .map_err(|e| SolverError::OutOfDomain {
            node,
            detail: e.to_string(),
        })
}

// ---------------------------------------------------------------------------
// the three step rules
// ---------------------------------------------------------------------------

/// One centralized Gauss-Newton update on a single estimate.
pub fn centralized_step(
    problem: &NlsProblem,
    x: &DVector<f64>,
    alpha: f64,
) -> Result<DVector<f64>, SolverError> {
    check_alpha(alpha)?;
    let members: Vec<usize> = (0..problem.node_count()).collect();
    let (normal, gradient) = normal_system_at_point(problem, &members, x)?;
    let direction = solve_normal_system(&normal, &gradient, None)?;
    let next = apply_step(x, alpha, &direction);
    check_in_domain(problem, &next, None)?;
    Ok(next)
}

/// One non-cooperative round: every node updates from its own estimate
/// using its neighborhood's data, all terms evaluated at that estimate.
pub fn noncooperative_step(
    problem: &NlsProblem,
    topology: &Topology,
    stacked: &DVector<f64>,
    alpha: f64,
) -> Result<DVector<f64>, SolverError> {
    check_alpha(alpha)?;
    let descent = noncooperative_descent(problem, topology, stacked)?;
    let m = problem.dim();
    let mut next = DVector::zeros(stacked.len());
    for k in 0..topology.node_count() {
        let own = stacked.rows(k * m, m).into_owned();
        let step = apply_step(&own, alpha, &descent.rows(k * m, m).into_owned());
        check_in_domain(problem, &step, Some(k))?;
        next.rows_mut(k * m, m).copy_from(&step);
    }
    Ok(next)
}

/// Stacked non-cooperative descent directions at the given state: block `k`
/// is `[Q_k(x_k)]^{-1} q_k(x_k)` with neighborhood sums evaluated at `x_k`.
pub fn noncooperative_descent(
    problem: &NlsProblem,
    topology: &Topology,
    stacked: &DVector<f64>,
) -> Result<DVector<f64>, SolverError> {
    let n = topology.node_count();
    let m = problem.dim();
    check_stacked(problem, n, stacked)?;
    let mut descent = DVector::zeros(n * m);
    for k in 0..n {
        let own = stacked.rows(k * m, m).into_owned();
        let (normal, gradient) = normal_system_at_point(problem, topology.neighbors(k), &own)?;
        let direction = solve_normal_system(&normal, &gradient, Some(k))?;
        descent.rows_mut(k * m, m).copy_from(&direction);
    }
    Ok(descent)
}

/// Output of one cooperative diffusion round.
#[derive(Debug, Clone)]
pub struct DiffusionStep {
    /// Stacked updated estimates.
    pub next: DVector<f64>,
    /// Stacked combine-phase aggregates.
    pub aggregate: DVector<f64>,
    /// Stacked cooperative descent directions.
    pub cooperative_descent: DVector<f64>,
}

/// One cooperative diffusion round: combine, then adapt from the aggregate.
pub fn diffusion_step(
    problem: &NlsProblem,
    weights: &CombinationMatrix,
    stacked: &DVector<f64>,
    alpha: f64,
    adapt_at: AdaptAt,
) -> Result<DiffusionStep, SolverError> {
    check_alpha(alpha)?;
    let topology = weights.topology();
    let n = topology.node_count();
    let m = problem.dim();
    check_stacked(problem, n, stacked)?;
    let aggregate = weights.combine(stacked, m)?;
    let mut next = DVector::zeros(n * m);
    let mut cooperative_descent = DVector::zeros(n * m);
    for k in 0..n {
        let own_aggregate = aggregate.rows(k * m, m).into_owned();
        let (normal, gradient) = match adapt_at {
            AdaptAt::NeighborAggregates => {
                normal_system_at_blocks(problem, topology.neighbors(k), &aggregate)?
            }
            AdaptAt::OwnAggregate => {
                normal_system_at_point(problem, topology.neighbors(k), &own_aggregate)?
            }
        };
        let direction = solve_normal_system(&normal, &gradient, Some(k))?;
        let step = apply_step(&own_aggregate, alpha, &direction);
        check_in_domain(problem, &step, Some(k))?;
        cooperative_descent.rows_mut(k * m, m).copy_from(&direction);
        next.rows_mut(k * m, m).copy_from(&step);
    }
    Ok(DiffusionStep {
        next,
        aggregate,
        cooperative_descent,
    })
}

fn check_stacked(
    problem: &NlsProblem,
    n: usize,
    stacked: &DVector<f64>,
) -> Result<(), SolverError> {
    if n != problem.node_count() {
        return Err(SolverError::BadConfig(format!(
            "network has {n} nodes, problem has {}",
            problem.node_count()
        )));
    }
    if stacked.len() != n * problem.dim() {
        return Err(SolverError::BadConfig(format!(
            "stacked state has length {}, expected {}",
            stacked.len(),
            n * problem.dim()
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// the run loop
// ---------------------------------------------------------------------------

/// Runs the configured mode from a common initial estimate across all
/// nodes, recording the full trace.
///
/// Stops when the stacked step norm falls to `tol * sqrt(N)` (per-node
/// tolerance semantics), when the iteration budget is exhausted, or when a
/// step fails; step failures are recorded on the trace rather than raised,
/// so partial histories stay observable.
pub fn run(
    problem: &NlsProblem,
    weights: &CombinationMatrix,
    config: &SolverConfig,
    x0: &DVector<f64>,
) -> Result<RunTrace, SolverError> {
    config.validate()?;
    let n = weights.node_count();
    let m = problem.dim();
    if n != problem.node_count() {
        return Err(SolverError::BadConfig(format!(
            "network has {n} nodes, problem has {}",
            problem.node_count()
        )));
    }
    if x0.len() != m {
        return Err(SolverError::BadInitial(format!(
            "initial estimate has dimension {}, expected {m}",
            x0.len()
        )));
    }
    problem
        .domain()
        .check(x0)
        .map_err(|e| SolverError::BadInitial(e.to_string()))?;

    let minimizer = problem.minimizer().clone();
    let mut state = broadcast(x0, n);
    let mut records = vec![make_record(&state, &minimizer, n, m)];
    let stop_reason;
    let mut failure = None;
    let tol_norm = config.tol * (n as f64).sqrt();

    let mut iteration = 0;
    loop {
        iteration += 1;
        let outcome = step_once(problem, weights, config, &state);
        match outcome {
            Ok(step) => {
                let previous = records.last_mut().expect("at least the initial record");
                previous.aggregate = step.aggregate;
                previous.cooperative_descent = step.cooperative_descent;
                previous.noncooperative_descent = step.noncooperative_descent;
                let delta = (&step.next - &state).norm();
                records.push(make_record(&step.next, &minimizer, n, m));
                state = step.next;
                if delta <= tol_norm {
                    stop_reason = StopReason::Tolerance;
                    break;
                }
                if iteration >= config.max_iters {
                    stop_reason = StopReason::MaxIterations;
                    break;
                }
            }
            Err(error) => {
                stop_reason = StopReason::Singular;
                failure = Some(error.to_string());
                break;
            }
        }
    }

    Ok(RunTrace {
        config: config.clone(),
        node_count: n,
        dim: m,
        minimizer,
        records,
        stop_reason,
        failure,
    })
}

struct StepOutcome {
    next: DVector<f64>,
    aggregate: Option<DVector<f64>>,
    cooperative_descent: Option<DVector<f64>>,
    noncooperative_descent: Option<DVector<f64>>,
}

fn step_once(
    problem: &NlsProblem,
    weights: &CombinationMatrix,
    config: &SolverConfig,
    state: &DVector<f64>,
) -> Result<StepOutcome, SolverError> {
    let n = weights.node_count();
    let m = problem.dim();
    match config.mode {
        Mode::Centralized => {
            // All nodes hold the same estimate; step once and broadcast.
            let own = state.rows(0, m).into_owned();
            let next = centralized_step(problem, &own, config.alpha)?;
            Ok(StepOutcome {
                next: broadcast(&next, n),
                aggregate: None,
                cooperative_descent: None,
                noncooperative_descent: None,
            })
        }
        Mode::NonCooperative => {
            let descent = noncooperative_descent(problem, weights.topology(), state)?;
            let mut next = DVector::zeros(n * m);
            for k in 0..n {
                let own = state.rows(k * m, m).into_owned();
                let step = apply_step(&own, config.alpha, &descent.rows(k * m, m).into_owned());
                check_in_domain(problem, &step, Some(k))?;
                next.rows_mut(k * m, m).copy_from(&step);
            }
            Ok(StepOutcome {
                next,
                aggregate: None,
                cooperative_descent: None,
                noncooperative_descent: Some(descent),
            })
        }
        Mode::Diffusion => {
            let step = diffusion_step(problem, weights, state, config.alpha, config.adapt_at)?;
            // Shadow diagnostic; its failure must not kill a healthy run.
            let shadow = noncooperative_descent(problem, weights.topology(), state).ok();
            Ok(StepOutcome {
                next: step.next,
                aggregate: Some(step.aggregate),
                cooperative_descent: Some(step.cooperative_descent),
                noncooperative_descent: shadow,
            })
        }
    }
}

fn broadcast(x: &DVector<f64>, n: usize) -> DVector<f64> {
    let m = x.len();
    DVector::from_fn(n * m, |i, _| x[i % m])
}

fn make_record(
    state: &DVector<f64>,
    minimizer: &DVector<f64>,
    n: usize,
    m: usize,
) -> IterationRecord {
    let node_errors: Vec<f64> = (0..n)
        .map(|k| (state.rows(k * m, m).into_owned() - minimizer).norm())
        .collect();
    let global_error = node_errors.iter().map(|e| e * e).sum::<f64>().sqrt();
    IterationRecord {
        state: state.clone(),
        aggregate: None,
        cooperative_descent: None,
        noncooperative_descent: None,
        node_errors,
        global_error,
    }
}
