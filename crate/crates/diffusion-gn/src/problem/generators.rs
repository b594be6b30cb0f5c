//! Seeded generators for the built-in problem families.
//!
//! Every generator is deterministic in `(kind, n, m, noise, seed)`: the RNG
//! is a ChaCha stream seeded from `seed` and all draws happen in a fixed
//! order, so equal inputs reproduce bit-identical instances.

use super::{BoxDomain, NlsProblem, ProblemError, ResidualModel};
use nalgebra::{DMatrix, DVector, RowDVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Built-in model families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    /// Affine residuals `f_k(x) = a_k' x - b_k` with Gaussian rows.
    Linear,
    /// Replicated scalar residual `f_k(x) = x^2 - b_k` on the interval [1, 2].
    ScalarSqrt,
    /// Two-parameter exponential decay fit `f_k(x) = x_1 exp(x_2 t_k) - y_k`.
    ExponentialFit,
    /// Planar range-based source localization against fixed anchors.
    Localization,
}

impl ProblemKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProblemKind::Linear => "linear",
            ProblemKind::ScalarSqrt => "scalar_sqrt",
            ProblemKind::ExponentialFit => "exponential_fit",
            ProblemKind::Localization => "localization",
        }
    }
}

impl std::str::FromStr for ProblemKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear" => Ok(ProblemKind::Linear),
            "scalar_sqrt" => Ok(ProblemKind::ScalarSqrt),
            "exponential_fit" => Ok(ProblemKind::ExponentialFit),
            "localization" => Ok(ProblemKind::Localization),
            other => Err(format!(
                "unknown problem kind '{other}' (expected linear, scalar_sqrt, exponential_fit, or localization)"
            )),
        }
    }
}

impl std::fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

// ---------------------------------------------------------------------------
// model structs
// ---------------------------------------------------------------------------

struct LinearModel {
    rows: DMatrix<f64>,
    rhs: DVector<f64>,
}

impl ResidualModel for LinearModel {
    fn node_count(&self) -> usize {
        self.rows.nrows()
    }
    fn dim(&self) -> usize {
        self.rows.ncols()
    }
    fn residual(&self, node: usize, x: &DVector<f64>) -> f64 {
        (self.rows.row(node) * x)[0] - self.rhs[node]
    }
    fn jacobian_row(&self, node: usize, x: &DVector<f64>) -> RowDVector<f64> {
        let _ = x;
        self.rows.row(node).into_owned()
    }
}

struct ScalarSqrtModel {
    targets: DVector<f64>,
}

impl ResidualModel for ScalarSqrtModel {
    fn node_count(&self) -> usize {
        self.targets.len()
    }
    fn dim(&self) -> usize {
        1
    }
    fn residual(&self, node: usize, x: &DVector<f64>) -> f64 {
        x[0] * x[0] - self.targets[node]
    }
    fn jacobian_row(&self, node: usize, x: &DVector<f64>) -> RowDVector<f64> {
        let _ = node;
        RowDVector::from_vec(vec![2.0 * x[0]])
    }
}

struct ExponentialFitModel {
    times: DVector<f64>,
    observations: DVector<f64>,
}

impl ResidualModel for ExponentialFitModel {
    fn node_count(&self) -> usize {
        self.times.len()
    }
    fn dim(&self) -> usize {
        2
    }
    fn residual(&self, node: usize, x: &DVector<f64>) -> f64 {
        x[0] * (x[1] * self.times[node]).exp() - self.observations[node]
    }
    fn jacobian_row(&self, node: usize, x: &DVector<f64>) -> RowDVector<f64> {
        let t = self.times[node];
        let e = (x[1] * t).exp();
        RowDVector::from_vec(vec![e, x[0] * t * e])
    }
}

struct LocalizationModel {
    anchors: Vec<[f64; 2]>,
    ranges: DVector<f64>,
}

impl ResidualModel for LocalizationModel {
    fn node_count(&self) -> usize {
        self.anchors.len()
    }
    fn dim(&self) -> usize {
        2
    }
    fn residual(&self, node: usize, x: &DVector<f64>) -> f64 {
        let [ax, ay] = self.anchors[node];
        ((x[0] - ax).powi(2) + (x[1] - ay).powi(2)).sqrt() - self.ranges[node]
    }
    fn jacobian_row(&self, node: usize, x: &DVector<f64>) -> RowDVector<f64> {
        let [ax, ay] = self.anchors[node];
        let dist = ((x[0] - ax).powi(2) + (x[1] - ay).powi(2)).sqrt();
        RowDVector::from_vec(vec![(x[0] - ax) / dist, (x[1] - ay) / dist])
    }
}

// ---------------------------------------------------------------------------
// generation
// ---------------------------------------------------------------------------

/// Anchors sit on a circle of this radius around the search region; keeping
/// them far away keeps the range Jacobian rows close to unit vectors over the
/// whole (much smaller) domain box.
const LOCALIZATION_ANCHOR_RADIUS: f64 = 500.0;
/// Half width of the localization search box.
const LOCALIZATION_BOX_HALF: f64 = 0.25;
/// Jitter applied to the evenly spaced anchor angles, in radians.
const LOCALIZATION_ANGLE_JITTER: f64 = 0.005;

/// Builds a seeded instance of one of the built-in families.
///
/// `noise` scales the i.i.d. standard normal perturbation injected into the
/// measurements; `noise = 0` makes the ground truth an exact zero-residual
/// minimizer. Dimension constraints: `scalar_sqrt` requires `m = 1`,
/// `exponential_fit` and `localization` require `m = 2`, and `linear`
/// requires `n >= m`.
pub fn make_problem(
    kind: ProblemKind,
    n: usize,
    m: usize,
    noise: f64,
    seed: u64,
) -> Result<NlsProblem, ProblemError> {
    if n == 0 || m == 0 {
        return Err(ProblemError::BadDimensions(format!(
            "need at least one node and one dimension, got n = {n}, m = {m}"
        )));
    }
    if !noise.is_finite() || noise < 0.0 {
        return Err(ProblemError::BadDimensions(format!(
            "noise scale must be finite and nonnegative, got {noise}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        ProblemKind::Linear => make_linear(n, m, noise, &mut rng),
        ProblemKind::ScalarSqrt => make_scalar_sqrt(n, m, noise, &mut rng),
        ProblemKind::ExponentialFit => make_exponential_fit(n, m, noise, &mut rng),
        ProblemKind::Localization => make_localization(n, m, noise, &mut rng),
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn make_linear(
    n: usize,
    m: usize,
    noise: f64,
    rng: &mut ChaCha8Rng,
) -> Result<NlsProblem, ProblemError> {
    if n < m {
        return Err(ProblemError::BadDimensions(format!(
            "linear kind needs n >= m for a determined system, got n = {n}, m = {m}"
        )));
    }
    // Gaussian rows are well conditioned with overwhelming probability; the
    // retry loop keeps generation total for adversarial seeds.
    let mut rows = DMatrix::zeros(n, m);
    let mut attempts = 0;
    loop {
        for k in 0..n {
            for j in 0..m {
                rows[(k, j)] = normal(rng);
            }
        }
        let smallest = rows
            .clone()
            .svd(false, false)
            .singular_values
            .iter()
            .fold(f64::INFINITY, |a, &s| a.min(s));
        if smallest > 1e-6 {
            break;
        }
        attempts += 1;
        if attempts >= 16 {
            return Err(ProblemError::GenerationFailed(
                "could not draw a well-conditioned linear system".into(),
            ));
        }
    }
    let truth = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
    let mut rhs = &rows * &truth;
    for k in 0..n {
        rhs[k] += noise * normal(rng);
    }
    // Closed-form minimizer from the normal equations.
    let normal_matrix = rows.transpose() * &rows;
    let projected = rows.transpose() * &rhs;
    let minimizer = normal_matrix
        .cholesky()
        .ok_or_else(|| {
            ProblemError::GenerationFailed("normal equations of the linear system are singular".into())
        })?
        .solve(&projected);
    let domain = BoxDomain::centered(&minimizer, 5.0)?;
    NlsProblem::new(
        Box::new(LinearModel { rows, rhs }),
        domain,
        minimizer,
        "linear",
    )
}

fn make_scalar_sqrt(
    n: usize,
    m: usize,
    noise: f64,
    rng: &mut ChaCha8Rng,
) -> Result<NlsProblem, ProblemError> {
    if m != 1 {
        return Err(ProblemError::BadDimensions(format!(
            "scalar_sqrt is one-dimensional, got m = {m}"
        )));
    }
    let targets = DVector::from_fn(n, |_, _| 2.0 + noise * normal(rng));
    // Stationarity: the gradient is 2 x sum_k (x^2 - b_k), zero exactly at
    // x = sqrt(mean(b)).
    let mean = targets.iter().sum::<f64>() / n as f64;
    if mean <= 0.0 {
        return Err(ProblemError::GenerationFailed(format!(
            "noise level {noise} drove the mean scalar target to {mean}"
        )));
    }
    let minimizer = DVector::from_vec(vec![mean.sqrt()]);
    let domain = BoxDomain::new(DVector::from_vec(vec![1.0]), DVector::from_vec(vec![2.0]))?;
    if !domain.contains(&minimizer) {
        return Err(ProblemError::GenerationFailed(format!(
            "noise level {noise} pushed the scalar minimizer {} outside [1, 2]",
            minimizer[0]
        )));
    }
    NlsProblem::new(
        Box::new(ScalarSqrtModel { targets }),
        domain,
        minimizer,
        "scalar_sqrt",
    )
}

fn make_exponential_fit(
    n: usize,
    m: usize,
    noise: f64,
    rng: &mut ChaCha8Rng,
) -> Result<NlsProblem, ProblemError> {
    if m != 2 {
        return Err(ProblemError::BadDimensions(format!(
            "exponential_fit has two parameters, got m = {m}"
        )));
    }
    let truth = DVector::from_vec(vec![1.0, -1.0]);
    let times = DVector::from_fn(n, |k, _| {
        if n == 1 {
            1.0
        } else {
            2.0 * k as f64 / (n - 1) as f64
        }
    });
    let observations = DVector::from_fn(n, |k, _| {
        truth[0] * (truth[1] * times[k]).exp() + noise * normal(rng)
    });
    let model = ExponentialFitModel {
        times,
        observations,
    };
    let domain = BoxDomain::new(
        DVector::from_vec(vec![0.25, -1.75]),
        DVector::from_vec(vec![1.75, -0.25]),
    )?;
    let minimizer = refine_minimizer(&model, &truth)?;
    if !domain.contains(&minimizer) {
        return Err(ProblemError::GenerationFailed(format!(
            "noise level {noise} pushed the fitted minimizer outside the search box"
        )));
    }
    NlsProblem::new(Box::new(model), domain, minimizer, "exponential_fit")
}

fn make_localization(
    n: usize,
    m: usize,
    noise: f64,
    rng: &mut ChaCha8Rng,
) -> Result<NlsProblem, ProblemError> {
    if m != 2 {
        return Err(ProblemError::BadDimensions(format!(
            "localization is planar, got m = {m}"
        )));
    }
    if n < 3 {
        return Err(ProblemError::BadDimensions(format!(
            "localization needs at least 3 anchors to pin down a plane point, got n = {n}"
        )));
    }
    let truth = DVector::from_fn(2, |_, _| rng.random_range(-0.05..0.05));
    let mut anchors = Vec::with_capacity(n);
    for k in 0..n {
        let angle = std::f64::consts::TAU * k as f64 / n as f64
            + LOCALIZATION_ANGLE_JITTER * rng.random_range(-1.0..1.0);
        anchors.push([
            LOCALIZATION_ANCHOR_RADIUS * angle.cos(),
            LOCALIZATION_ANCHOR_RADIUS * angle.sin(),
        ]);
    }
    let ranges = DVector::from_fn(n, |k, _| {
        let [ax, ay] = anchors[k];
        ((truth[0] - ax).powi(2) + (truth[1] - ay).powi(2)).sqrt() + noise * normal(rng)
    });
    let model = LocalizationModel { anchors, ranges };
    let domain = BoxDomain::centered(&truth, LOCALIZATION_BOX_HALF)?;
    let minimizer = refine_minimizer(&model, &truth)?;
    if !domain.contains(&minimizer) {
        return Err(ProblemError::GenerationFailed(format!(
            "noise level {noise} pushed the fitted source position outside the search box"
        )));
    }
    NlsProblem::new(Box::new(model), domain, minimizer, "localization")
}

/// Full-step Gauss-Newton polish of the reference minimizer, run from the
/// ground truth until the step norm drops below 1e-12 (at most 200
/// iterations). For the small noise levels the generators accept, this sits
/// deep in the quadratic convergence basin.
fn refine_minimizer(
    model: &dyn ResidualModel,
    start: &DVector<f64>,
) -> Result<DVector<f64>, ProblemError> {
    let n = model.node_count();
    let m = model.dim();
    let mut x = start.clone();
    for _ in 0..200 {
        let mut jacobian = DMatrix::zeros(n, m);
        let mut residuals = DVector::zeros(n);
        for k in 0..n {
            residuals[k] = model.residual(k, &x);
            jacobian.set_row(k, &model.jacobian_row(k, &x));
        }
        let normal_matrix = jacobian.transpose() * &jacobian;
        let gradient = jacobian.transpose() * &residuals;
        let step = normal_matrix
            .cholesky()
            .ok_or_else(|| {
                ProblemError::GenerationFailed(
                    "normal matrix became singular while refining the minimizer".into(),
                )
            })?
            .solve(&gradient);
        x -= &step;
        if step.norm() <= 1e-12 {
            return Ok(x);
        }
    }
    Err(ProblemError::GenerationFailed(
        "minimizer refinement did not converge within 200 iterations".into(),
    ))
}
