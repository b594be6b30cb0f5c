//! Problem descriptions: residual models, box domains, generated instances.
//!
//! A problem couples three things: a [`ResidualModel`] giving each node's
//! scalar residual `f_k(x)` and Jacobian row `F_k(x)`, a rectangular
//! [`BoxDomain`] on which the model is defined, and the reference minimizer
//! the solvers are measured against. Instances of the four built-in model
//! families are produced by [`make_problem`]; curvature and residual bounds
//! used by the certification engine are estimated by [`estimate_bounds`].

mod bounds;
mod generators;

pub use bounds::{estimate_bounds, estimate_bounds_with_safety, BoundsProfile, DEFAULT_SAFETY};
pub use generators::{make_problem, ProblemKind};

use nalgebra::{DMatrix, DVector, RowDVector};
use thiserror::Error;

/// Errors raised by problem construction and evaluation.
#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("component {index} = {value} lies outside the domain interval [{lower}, {upper}]")]
    OutOfDomain {
        index: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error("evaluation at node {node} produced a non-finite value")]
    NonFiniteValue { node: usize },
    #[error("node index {node} out of range for {count} nodes")]
    NodeOutOfRange { node: usize, count: usize },
    #[error("dimension mismatch: {0}")]
    BadDimensions(String),
    #[error("sampled Jacobian row norm {sigma:.3e} is numerically degenerate")]
    DegenerateJacobian { sigma: f64 },
    #[error("bound estimation needs at least 2 sample points, got {got}")]
    InsufficientSamples { got: usize },
    #[error("safety factor must be strictly greater than 1, got {value}")]
    InvalidSafetyFactor { value: f64 },
    #[error("problem generation failed: {0}")]
    GenerationFailed(String),
}

/// Axis-aligned box `[lower_1, upper_1] x ... x [lower_M, upper_M]`.
///
/// Evaluation outside the box is an error everywhere in this crate; nothing
/// clamps silently.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    lower: DVector<f64>,
    upper: DVector<f64>,
}

impl BoxDomain {
    /// Builds a box from elementwise bounds; every interval must be
    /// non-degenerate and finite.
    pub fn new(lower: DVector<f64>, upper: DVector<f64>) -> Result<Self, ProblemError> {
        if lower.len() != upper.len() {
            return Err(ProblemError::BadDimensions(format!(
                "domain bounds have lengths {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        if lower.len() == 0 {
            return Err(ProblemError::BadDimensions(
                "domain must have at least one dimension".into(),
            ));
        }
        for j in 0..lower.len() {
            if !lower[j].is_finite() || !upper[j].is_finite() || lower[j] >= upper[j] {
                return Err(ProblemError::BadDimensions(format!(
                    "domain interval {j} is [{}, {}]",
                    lower[j], upper[j]
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// Box centered at `center` with per-coordinate half width `half`.
    pub fn centered(center: &DVector<f64>, half: f64) -> Result<Self, ProblemError> {
        if half <= 0.0 || !half.is_finite() {
            return Err(ProblemError::BadDimensions(format!(
                "half width must be positive and finite, got {half}"
            )));
        }
        Self::new(center.map(|c| c - half), center.map(|c| c + half))
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &DVector<f64> {
        &self.lower
    }

    pub fn upper(&self) -> &DVector<f64> {
        &self.upper
    }

    pub fn contains(&self, x: &DVector<f64>) -> bool {
        x.len() == self.dim()
            && (0..x.len()).all(|j| x[j] >= self.lower[j] && x[j] <= self.upper[j])
    }

    /// Membership check that reports the first offending coordinate.
    pub fn check(&self, x: &DVector<f64>) -> Result<(), ProblemError> {
        if x.len() != self.dim() {
            return Err(ProblemError::BadDimensions(format!(
                "point has dimension {}, domain has {}",
                x.len(),
                self.dim()
            )));
        }
        for j in 0..x.len() {
            if !(x[j] >= self.lower[j] && x[j] <= self.upper[j]) {
                return Err(ProblemError::OutOfDomain {
                    index: j,
                    value: x[j],
                    lower: self.lower[j],
                    upper: self.upper[j],
                });
            }
        }
        Ok(())
    }

    /// Point at the given per-coordinate fractions of the box, 0 mapping to
    /// the lower corner and 1 to the upper.
    pub fn point_at(&self, fractions: &[f64]) -> Result<DVector<f64>, ProblemError> {
        if fractions.len() != self.dim() {
            return Err(ProblemError::BadDimensions(format!(
                "{} fractions for a {}-dimensional domain",
                fractions.len(),
                self.dim()
            )));
        }
        for (j, f) in fractions.iter().enumerate() {
            if !(0.0..=1.0).contains(f) {
                return Err(ProblemError::BadDimensions(format!(
                    "fraction {j} = {f} outside [0, 1]"
                )));
            }
        }
        Ok(DVector::from_fn(self.dim(), |j, _| {
            self.lower[j] + fractions[j] * (self.upper[j] - self.lower[j])
        }))
    }
}

/// Per-node residual model: node `k` contributes the scalar residual
/// `f_k(x)` with gradient row `F_k(x)`.
///
/// Implementations must be pure: evaluation is reentrant and safe to call
/// concurrently, which the `Send + Sync` bound encodes.
pub trait ResidualModel: Send + Sync {
    fn node_count(&self) -> usize;
    fn dim(&self) -> usize;
    fn residual(&self, node: usize, x: &DVector<f64>) -> f64;
    fn jacobian_row(&self, node: usize, x: &DVector<f64>) -> RowDVector<f64>;
}

/// A nonlinear least-squares instance: model, domain, and the reference
/// minimizer all error measurements are taken against.
pub struct NlsProblem {
    model: Box<dyn ResidualModel>,
    domain: BoxDomain,
    minimizer: DVector<f64>,
    label: String,
}

/// Full-network evaluation at one point.
#[derive(Debug, Clone)]
pub struct GlobalEval {
    /// Stacked residual vector, entry `k` is `f_k(x)`.
    pub residuals: DVector<f64>,
    /// Stacked Jacobian, row `k` is `F_k(x)`.
    pub jacobian: DMatrix<f64>,
    /// Aggregate cost `sum_k f_k(x)^2`.
    pub cost: f64,
}

impl NlsProblem {
    /// Wraps a model with its domain and reference minimizer.
    ///
    /// The minimizer must lie inside the domain and the dimensions must
    /// agree; the stationarity of the minimizer is the generator's
    /// responsibility and is exercised by the test suite.
    pub fn new(
        model: Box<dyn ResidualModel>,
        domain: BoxDomain,
        minimizer: DVector<f64>,
        label: impl Into<String>,
    ) -> Result<Self, ProblemError> {
        if model.dim() != domain.dim() {
            return Err(ProblemError::BadDimensions(format!(
                "model dimension {} does not match domain dimension {}",
                model.dim(),
                domain.dim()
            )));
        }
        if model.node_count() == 0 {
            return Err(ProblemError::BadDimensions(
                "model must have at least one node".into(),
            ));
        }
        domain.check(&minimizer)?;
        Ok(Self {
            model,
            domain,
            minimizer,
            label: label.into(),
        })
    }

    pub fn node_count(&self) -> usize {
        self.model.node_count()
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn minimizer(&self) -> &DVector<f64> {
        &self.minimizer
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    fn check_node(&self, node: usize) -> Result<(), ProblemError> {
        if node >= self.node_count() {
            return Err(ProblemError::NodeOutOfRange {
                node,
                count: self.node_count(),
            });
        }
        Ok(())
    }

    /// Residual of one node, with domain and finiteness enforcement.
    pub fn residual(&self, node: usize, x: &DVector<f64>) -> Result<f64, ProblemError> {
        self.check_node(node)?;
        self.domain.check(x)?;
        let value = self.model.residual(node, x);
        if !value.is_finite() {
            return Err(ProblemError::NonFiniteValue { node });
        }
        Ok(value)
    }

    /// Jacobian row of one node, with domain and finiteness enforcement.
    pub fn jacobian_row(&self, node: usize, x: &DVector<f64>) -> Result<RowDVector<f64>, ProblemError> {
        self.check_node(node)?;
        self.domain.check(x)?;
        let row = self.model.jacobian_row(node, x);
        if row.len() != self.dim() {
            return Err(ProblemError::BadDimensions(format!(
                "model returned a row of length {} for dimension {}",
                row.len(),
                self.dim()
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(ProblemError::NonFiniteValue { node });
        }
        Ok(row)
    }

    /// Stacked residual vector, Jacobian, and cost at one point.
    pub fn evaluate_global(&self, x: &DVector<f64>) -> Result<GlobalEval, ProblemError> {
        self.domain.check(x)?;
        let n = self.node_count();
        let m = self.dim();
        let mut residuals = DVector::zeros(n);
        let mut jacobian = DMatrix::zeros(n, m);
        for k in 0..n {
            residuals[k] = self.residual(k, x)?;
            jacobian.set_row(k, &self.jacobian_row(k, x)?);
        }
        let cost = residuals.iter().map(|r| r * r).sum();
        Ok(GlobalEval {
            residuals,
            jacobian,
            cost,
        })
    }
}

impl std::fmt::Debug for NlsProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NlsProblem")
            .field("label", &self.label)
            .field("nodes", &self.node_count())
            .field("dim", &self.dim())
            .finish()
    }
}

/// Central-difference approximation of one Jacobian row.
///
/// The step is scaled per coordinate as `1e-6 * (1 + |x_j|)`; callers must
/// keep `x` far enough inside the domain for both probe points to stay
/// feasible.
pub fn finite_difference_row(
    problem: &NlsProblem,
    node: usize,
    x: &DVector<f64>,
) -> Result<RowDVector<f64>, ProblemError> {
    let mut row = RowDVector::zeros(problem.dim());
    for j in 0..problem.dim() {
        let h = 1e-6 * (1.0 + x[j].abs());
        let mut forward = x.clone();
        forward[j] += h;
        let mut backward = x.clone();
        backward[j] -= h;
        let fp = problem.residual(node, &forward)?;
        let fm = problem.residual(node, &backward)?;
        row[j] = (fp - fm) / (2.0 * h);
    }
    Ok(row)
}

/// Largest relative deviation between analytic and central-difference
/// Jacobian rows over seeded interior sample points.
///
/// The deviation of one entry is `|analytic - numeric| / (1 + |analytic|)`.
/// Points are drawn uniformly over the central part of the box so that the
/// difference stencil never leaves the domain.
pub fn max_jacobian_deviation(
    problem: &NlsProblem,
    points: usize,
    seed: u64,
) -> Result<f64, ProblemError> {
    use rand::{Rng, SeedableRng};
    if points == 0 {
        return Err(ProblemError::InsufficientSamples { got: 0 });
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..points {
        let fractions: Vec<f64> = (0..problem.dim())
            .map(|_| rng.random_range(0.01..0.99))
            .collect();
        let x = problem.domain().point_at(&fractions)?;
        for k in 0..problem.node_count() {
            let analytic = problem.jacobian_row(k, &x)?;
            let numeric = finite_difference_row(problem, k, &x)?;
            for j in 0..problem.dim() {
                let dev = (analytic[j] - numeric[j]).abs() / (1.0 + analytic[j].abs());
                worst = worst.max(dev);
            }
        }
    }
    Ok(worst)
}
