//! Sampled curvature and residual bounds.
//!
//! The convergence certificate consumes a handful of scalar constants that
//! describe the problem over its whole domain: extreme per-node Jacobian row
//! norms, extreme singular values of the stacked Jacobian, a Lipschitz
//! constant for the stacked Jacobian, and residual-norm envelopes. None of
//! these are available in closed form for the nonlinear families, so they are
//! estimated from a low-discrepancy sample of the box and then pushed outward
//! by a safety factor: maxima are multiplied by it, minima divided. The
//! sample always includes the reference minimizer so that the residual floor
//! reflects the optimum.

use super::{NlsProblem, ProblemError};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Default outward inflation applied to every estimated bound.
pub const DEFAULT_SAFETY: f64 = 1.05;

/// Sampled problem constants consumed by the certification engine.
///
/// Directionality matters: `*_max` fields are inflated upper estimates,
/// `*_min` fields deflated lower estimates, so plugging them into the
/// sufficient conditions errs on the conservative side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsProfile {
    /// Smallest per-node Jacobian row norm seen over the sample.
    pub node_gain_min: f64,
    /// Largest per-node Jacobian row norm seen over the sample.
    pub node_gain_max: f64,
    /// Smallest singular value of the stacked Jacobian over the sample.
    pub stack_gain_min: f64,
    /// Largest singular value of the stacked Jacobian over the sample.
    pub stack_gain_max: f64,
    /// Lipschitz estimate for the stacked Jacobian map.
    pub jacobian_lipschitz: f64,
    /// Lipschitz-style constant for the stacked gradient map, derived as
    /// `jacobian_lipschitz * (neighborhood_residual_max + stack_gain_max)`.
    pub gradient_lipschitz: f64,
    /// Lipschitz-style constant for the Gauss-Newton normal matrix map,
    /// derived as `2 * stack_gain_max * jacobian_lipschitz`.
    pub normal_matrix_lipschitz: f64,
    /// Largest whole-network residual norm over the sample; upper bound for
    /// every neighborhood residual subvector as well.
    pub neighborhood_residual_max: f64,
    /// Smallest whole-network residual norm over the sample; attained at or
    /// near the reference minimizer, which is always sampled.
    pub neighborhood_residual_min: f64,
    /// Largest single-node absolute residual over the sample.
    pub node_residual_max: f64,
    /// Smallest single-node absolute residual over the sample.
    pub node_residual_min: f64,
    /// Inflation factor the estimates were pushed outward by.
    pub safety: f64,
}

impl BoundsProfile {
    /// Checks the ordering invariants the estimator promises.
    pub fn validate(&self) -> Result<(), ProblemError> {
        let ordered = self.node_gain_min > 0.0
            && self.node_gain_min < self.node_gain_max
            && self.stack_gain_min > 0.0
            && self.stack_gain_min < self.stack_gain_max
            && self.neighborhood_residual_min >= 0.0
            && self.neighborhood_residual_min <= self.neighborhood_residual_max
            && self.node_residual_min >= 0.0
            && self.node_residual_min <= self.node_residual_max
            && self.jacobian_lipschitz >= 0.0;
        if !ordered {
            return Err(ProblemError::BadDimensions(format!(
                "bounds profile violates ordering invariants: {self:?}"
            )));
        }
        if self.safety <= 1.0 {
            return Err(ProblemError::InvalidSafetyFactor { value: self.safety });
        }
        Ok(())
    }
}

/// Estimates a [`BoundsProfile`] with the default safety factor.
pub fn estimate_bounds(
    problem: &NlsProblem,
    samples: usize,
    seed: u64,
) -> Result<BoundsProfile, ProblemError> {
    estimate_bounds_with_safety(problem, samples, seed, DEFAULT_SAFETY)
}

/// Estimates a [`BoundsProfile`] with an explicit safety factor (> 1).
///
/// `samples` low-discrepancy points are drawn from the domain (a Halton
/// sequence under a seeded random shift), the reference minimizer is added
/// as an extra evaluation point, and extremes are collected per point. The
/// Jacobian Lipschitz constant is the largest difference quotient
/// `|F(x) - F(y)| / |x - y|` in spectral norm over all sample pairs. Any
/// sampled row norm at or below `1e-12` aborts with `DegenerateJacobian`.
pub fn estimate_bounds_with_safety(
    problem: &NlsProblem,
    samples: usize,
    seed: u64,
    safety: f64,
) -> Result<BoundsProfile, ProblemError> {
    if samples < 2 {
        return Err(ProblemError::InsufficientSamples { got: samples });
    }
    if !(safety > 1.0) || !safety.is_finite() {
        return Err(ProblemError::InvalidSafetyFactor { value: safety });
    }

    let mut points = halton_points(problem, samples, seed)?;
    points.push(problem.minimizer().clone());

    let mut node_gain_min = f64::INFINITY;
    let mut node_gain_max: f64 = 0.0;
    let mut stack_gain_min = f64::INFINITY;
    let mut stack_gain_max: f64 = 0.0;
    let mut net_residual_min = f64::INFINITY;
    let mut net_residual_max: f64 = 0.0;
    let mut node_residual_min = f64::INFINITY;
    let mut node_residual_max: f64 = 0.0;

    let mut jacobians: Vec<DMatrix<f64>> = Vec::with_capacity(points.len());
    for x in &points {
        let eval = problem.evaluate_global(x)?;
        for k in 0..problem.node_count() {
            let row_norm = eval.jacobian.row(k).norm();
            if row_norm <= 1e-12 {
                return Err(ProblemError::DegenerateJacobian { sigma: row_norm });
            }
            node_gain_min = node_gain_min.min(row_norm);
            node_gain_max = node_gain_max.max(row_norm);
            let r = eval.residuals[k].abs();
            node_residual_min = node_residual_min.min(r);
            node_residual_max = node_residual_max.max(r);
        }
        let singular = eval.jacobian.clone().svd(false, false).singular_values;
        let (mut smallest, mut largest) = (f64::INFINITY, 0.0f64);
        for &s in singular.iter() {
            smallest = smallest.min(s);
            largest = largest.max(s);
        }
        // A rank-deficient stack means the network cannot identify the
        // parameter even with full cooperation.
        if problem.node_count() >= problem.dim() && smallest <= 1e-12 {
            return Err(ProblemError::DegenerateJacobian { sigma: smallest });
        }
        stack_gain_min = stack_gain_min.min(smallest);
        stack_gain_max = stack_gain_max.max(largest);
        let net_norm = eval.residuals.norm();
        net_residual_min = net_residual_min.min(net_norm);
        net_residual_max = net_residual_max.max(net_norm);
        jacobians.push(eval.jacobian);
    }

    let mut lipschitz: f64 = 0.0;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let gap = (&points[i] - &points[j]).norm();
            if gap <= 1e-14 {
                continue;
            }
            let diff = &jacobians[i] - &jacobians[j];
            let spectral = diff.svd(false, false).singular_values[0];
            lipschitz = lipschitz.max(spectral / gap);
        }
    }

    let stack_gain_max_inflated = stack_gain_max * safety;
    let jacobian_lipschitz = lipschitz * safety;
    let neighborhood_residual_max = net_residual_max * safety;
    let profile = BoundsProfile {
        node_gain_min: node_gain_min / safety,
        node_gain_max: node_gain_max * safety,
        stack_gain_min: stack_gain_min / safety,
        stack_gain_max: stack_gain_max_inflated,
        jacobian_lipschitz,
        gradient_lipschitz: jacobian_lipschitz * (neighborhood_residual_max + stack_gain_max_inflated),
        normal_matrix_lipschitz: 2.0 * stack_gain_max_inflated * jacobian_lipschitz,
        neighborhood_residual_max,
        neighborhood_residual_min: net_residual_min / safety,
        node_residual_max: node_residual_max * safety,
        node_residual_min: node_residual_min / safety,
        safety,
    };
    profile.validate()?;
    Ok(profile)
}

/// Halton sequence in the problem domain under a seeded Cranley-Patterson
/// shift: quasi-uniform coverage, deterministic per seed.
fn halton_points(
    problem: &NlsProblem,
    samples: usize,
    seed: u64,
) -> Result<Vec<DVector<f64>>, ProblemError> {
    let dim = problem.dim();
    let bases = first_primes(dim)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..dim).map(|_| rng.random_range(0.0..1.0)).collect();
    let domain = problem.domain();
    let mut points = Vec::with_capacity(samples);
    for i in 0..samples {
        let x = DVector::from_fn(dim, |j, _| {
            let u = (radical_inverse(i as u64 + 1, bases[j]) + shift[j]).fract();
            domain.lower()[j] + u * (domain.upper()[j] - domain.lower()[j])
        });
        points.push(x);
    }
    Ok(points)
}

fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let mut result = 0.0;
    let mut fraction = 1.0 / base as f64;
    while index > 0 {
        result += (index % base) as f64 * fraction;
        index /= base;
        fraction /= base as f64;
    }
    result
}

fn first_primes(count: usize) -> Result<Vec<u64>, ProblemError> {
    if count > 64 {
        return Err(ProblemError::BadDimensions(format!(
            "bound sampling supports at most 64 dimensions, got {count}"
        )));
    }
    let mut primes = Vec::with_capacity(count);
    let mut candidate = 2u64;
    while primes.len() < count {
        if (2..candidate).take_while(|d| d * d <= candidate).all(|d| candidate % d != 0) {
            primes.push(candidate);
        }
        candidate += 1;
    }
    Ok(primes)
}
