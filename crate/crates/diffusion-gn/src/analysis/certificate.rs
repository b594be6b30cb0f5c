//! Certification of the sufficient convergence conditions.
//!
//! A certificate bundles the assembled constant chain, the equilibria of
//! the scalar error map, and one flag per sufficient condition, each with
//! the numeric margin by which it holds or fails. Certification never
//! errors on a failed condition: failures are data, reported with their
//! margins, and only malformed inputs raise.

use super::constants::{network_constants, LemmaConstants};
use super::equilibria::{equilibria, stability_windows, EquilibriumPair, StabilityWindows};
use super::AnalysisError;
use crate::network::{
    neighborhood_stats, spectral_norm, spectral_radius, CombinationMatrix, NeighborhoodStats,
};
use crate::problem::{BoundsProfile, NlsProblem};
use crate::solvers::SolverConfig;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

/// One sufficient condition, evaluated.
///
/// `margin` is the signed distance to the failure boundary (positive means
/// the condition holds with room to spare); it is `None` when the distance
/// is unbounded or undefined, in which case `pass` alone carries the
/// verdict and `detail` says why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionFlag {
    pub pass: bool,
    pub margin: Option<f64>,
    pub detail: String,
}

impl ConditionFlag {
    fn new(pass: bool, margin: Option<f64>, detail: impl Into<String>) -> Self {
        Self {
            pass,
            margin,
            detail: detail.into(),
        }
    }
}

fn finite(value: f64) -> Option<f64> {
    value.is_finite().then_some(value)
}

/// Derived quantities reported for inspection alongside the verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateDiagnostics {
    /// Spectral norm of the extended combination matrix, the `g` used by
    /// every window and equilibrium computation.
    pub g_spectral: f64,
    /// Frobenius norm of the same matrix, reported because parts of the
    /// recursion algebra are sometimes stated against it; it always
    /// dominates the spectral norm.
    pub g_frobenius: f64,
    /// Spectral radius of the combination matrix; row stochasticity pins
    /// it to one, so any drift here signals a malformed matrix.
    pub combination_spectral_radius: f64,
    /// Direct derivative test at the attracting equilibrium; `None` when
    /// the discrepancy bound (and with it the equilibria) is undefined.
    pub stable: Option<bool>,
    /// Operator-norm ceiling under which the attracting equilibrium is
    /// provably stable.
    pub g_norm_ceiling: Option<f64>,
    /// Endpoints of the rearranged (diagnostic-only) norm interval; its
    /// interior brackets the discriminant sign flip, not the safe region.
    pub g_window_low: Option<f64>,
    pub g_window_high: Option<f64>,
    /// Endpoints of the admissible step-size window.
    pub alpha_window_low: Option<f64>,
    pub alpha_window_high: Option<f64>,
    /// Bound on the norm of any inverted per-node normal matrix,
    /// `1 / (n_min s_min^2)`. The row-gain floor enters squared because
    /// the normal matrix is a sum of `n_l` rank-one terms of squared row
    /// norm at least `s_min^2`.
    pub normal_inverse_norm_bound: f64,
    /// The same bound with the gain floor entering linearly, kept so the
    /// two algebraically plausible exponents can be compared side by side.
    pub normal_inverse_norm_bound_alternate: f64,
    /// Stacked initial error `sqrt(N) |x0 - x*|` measured against the
    /// reference minimizer; compared to the repelling equilibrium by the
    /// basin flag.
    pub initial_stack_error: f64,
}

/// Verdict on every sufficient condition for cooperative convergence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceCertificate {
    pub constants: LemmaConstants,
    /// Fixed points of the error map; `None` when the discrepancy bound is
    /// undefined or no attracting point exists.
    pub equilibria: Option<EquilibriumPair>,
    /// Every ordered pair of nodes shares at least one neighbor.
    pub connectivity: ConditionFlag,
    /// The worst exclusive-neighbor fraction stays under the squared
    /// row-gain ratio `(s_min / s_max)^2`.
    pub neighborhood_overlap: ConditionFlag,
    /// The error-map discriminant is positive, so two real equilibria
    /// exist.
    pub discriminant: ConditionFlag,
    /// The operator norm of the extended combination matrix sits below the
    /// stability ceiling.
    pub g_norm_window: ConditionFlag,
    /// The step size sits strictly inside the admissible window.
    pub alpha_window: ConditionFlag,
    /// Both expansion ratios stay below one over the horizon, keeping the
    /// perturbation series behind the discrepancy bound summable.
    pub expansion: ConditionFlag,
    /// The pairwise step-size growth condition holds over the horizon.
    pub step_size_smallness: ConditionFlag,
    /// The initial stacked error starts inside the basin bounded by the
    /// repelling equilibrium.
    pub initial_error: ConditionFlag,
    /// Conjunction of all flags.
    pub overall: bool,
    pub diagnostics: CertificateDiagnostics,
}

impl ConvergenceCertificate {
    /// All flags with their report names, in a fixed order.
    pub fn flags(&self) -> [(&'static str, &ConditionFlag); 8] {
        [
            ("connectivity", &self.connectivity),
            ("neighborhood_overlap", &self.neighborhood_overlap),
            ("discriminant", &self.discriminant),
            ("g_norm_window", &self.g_norm_window),
            ("alpha_window", &self.alpha_window),
            ("expansion", &self.expansion),
            ("step_size_smallness", &self.step_size_smallness),
            ("initial_error", &self.initial_error),
        ]
    }
}

/// Evaluates every sufficient condition for the cooperative solver on this
/// problem, network, and starting point.
///
/// `bounds` is taken precomputed so a caller can share one sampled profile
/// between certification and trace auditing; `horizon` is the iteration
/// count the horizon-dependent conditions are evaluated over. Condition
/// failures never raise; only malformed inputs do.
pub fn certify(
    problem: &NlsProblem,
    weights: &CombinationMatrix,
    config: &SolverConfig,
    x0: &DVector<f64>,
    horizon: usize,
    bounds: &BoundsProfile,
) -> Result<ConvergenceCertificate, AnalysisError> {
    config.validate()?;
    bounds.validate()?;
    if weights.node_count() != problem.node_count() {
        return Err(AnalysisError::BadInput(format!(
            "network has {} nodes but the problem has {}",
            weights.node_count(),
            problem.node_count()
        )));
    }
    if x0.len() != problem.dim() {
        return Err(AnalysisError::BadInput(format!(
            "x0 has dimension {} but the problem has {}",
            x0.len(),
            problem.dim()
        )));
    }
    if horizon == 0 {
        return Err(AnalysisError::BadInput("horizon must be at least 1".into()));
    }

    let stats = neighborhood_stats(weights.topology());
    let n = stats.node_count();
    let alpha = config.alpha;
    let constants = network_constants(bounds, &stats, alpha, horizon);

    let extended = weights.extended(problem.dim());
    let g_spectral = spectral_norm(&extended)?;
    let g_frobenius = weights.extended_frobenius_norm(problem.dim());
    let combination_spectral_radius = spectral_radius(weights.matrix())?;

    let connectivity = match stats.min_shared() {
        None => ConditionFlag::new(true, None, "single node: no pairs to couple"),
        Some(smallest) => ConditionFlag::new(
            smallest > 0,
            Some(smallest as f64),
            format!("smallest shared-neighborhood count over ordered pairs is {smallest}"),
        ),
    };

    let gain_ratio = (bounds.node_gain_min / bounds.node_gain_max).powi(2);
    let mut worst_overlap = 0.0f64;
    for k in 0..n {
        for l in 0..n {
            if l != k {
                let exclusive = (stats.exclusive(k, l) + stats.exclusive(l, k)) as f64;
                worst_overlap = worst_overlap.max(exclusive / stats.size(l) as f64);
            }
        }
    }
    let neighborhood_overlap = ConditionFlag::new(
        worst_overlap < gain_ratio,
        Some(gain_ratio - worst_overlap),
        format!(
            "worst exclusive-neighbor fraction {worst_overlap:.6} vs squared gain ratio {gain_ratio:.6}"
        ),
    );

    let worst_expansion = constants
        .zeta
        .iter()
        .chain(constants.mu.iter())
        .fold(0.0f64, |acc, &v| acc.max(v));
    let expansion = ConditionFlag::new(
        worst_expansion < 1.0,
        Some(1.0 - worst_expansion),
        format!("largest expansion ratio over {horizon} iterations is {worst_expansion:.6}"),
    );

    let step_size_smallness = step_size_flag(bounds, &constants, &stats, alpha, horizon);

    // Everything past this point needs the discrepancy bound.
    let equilibria_pair: Option<EquilibriumPair>;
    let discriminant: ConditionFlag;
    let g_norm_window: ConditionFlag;
    let alpha_window: ConditionFlag;
    let initial_error: ConditionFlag;
    let stable: Option<bool>;
    let windows: Option<StabilityWindows>;
    let initial_stack_error = (n as f64).sqrt() * (x0 - problem.minimizer()).norm();
    match constants.xi {
        None => {
            let why = "descent-discrepancy bound undefined: an expansion ratio reached 1";
            equilibria_pair = None;
            stable = None;
            windows = None;
            discriminant = ConditionFlag::new(false, None, why);
            g_norm_window = ConditionFlag::new(false, None, why);
            alpha_window = ConditionFlag::new(false, None, why);
            initial_error = ConditionFlag::new(false, None, why);
        }
        Some(xi) => {
            let w = stability_windows(constants.t1, constants.t2, g_spectral, alpha, xi);
            stable = Some(w.stable);

            let (pair, disc_flag) = match equilibria(constants.t1, constants.t2, g_spectral, alpha, xi)
            {
                Ok(pair) => {
                    let flag = ConditionFlag::new(
                        pair.discriminant > 0.0,
                        Some(pair.discriminant),
                        format!("discriminant {:.6e}", pair.discriminant),
                    );
                    (Some(pair), flag)
                }
                Err(AnalysisError::NoRealEquilibrium { discriminant }) => (
                    None,
                    ConditionFlag::new(
                        false,
                        Some(discriminant),
                        format!("discriminant {discriminant:.6e} is negative"),
                    ),
                ),
                Err(AnalysisError::BadInput(why)) => {
                    (None, ConditionFlag::new(false, None, why))
                }
                Err(other) => return Err(other),
            };
            equilibria_pair = pair;
            discriminant = disc_flag;

            g_norm_window = ConditionFlag::new(
                g_spectral < w.g_norm_ceiling,
                finite(w.g_norm_ceiling - g_spectral),
                format!(
                    "operator norm {g_spectral:.6} vs stability ceiling {:.6}",
                    w.g_norm_ceiling
                ),
            );

            let (lo, hi) = w.alpha_window;
            alpha_window = ConditionFlag::new(
                alpha > lo && alpha < hi,
                finite((alpha - lo).min(hi - alpha)),
                format!("step size {alpha} vs window ({lo:.6}, {hi:.6})"),
            );

            initial_error = match &equilibria_pair {
                Some(pair) => ConditionFlag::new(
                    initial_stack_error < pair.y_max,
                    finite(pair.y_max - initial_stack_error),
                    format!(
                        "initial stacked error {initial_stack_error:.6} vs basin bound {:.6}",
                        pair.y_max
                    ),
                ),
                None => ConditionFlag::new(
                    false,
                    None,
                    "no equilibrium pair to bound the basin of attraction",
                ),
            };
            windows = Some(w);
        }
    }

    let n_min = (0..n).map(|k| stats.size(k)).min().expect("at least one node") as f64;
    let s_min = bounds.node_gain_min;
    let diagnostics = CertificateDiagnostics {
        g_spectral,
        g_frobenius,
        combination_spectral_radius,
        stable,
        g_norm_ceiling: windows.and_then(|w| finite(w.g_norm_ceiling)),
        g_window_low: windows.and_then(|w| finite(w.g_window.0)),
        g_window_high: windows.and_then(|w| finite(w.g_window.1)),
        alpha_window_low: windows.and_then(|w| finite(w.alpha_window.0)),
        alpha_window_high: windows.and_then(|w| finite(w.alpha_window.1)),
        normal_inverse_norm_bound: 1.0 / (n_min * s_min * s_min),
        normal_inverse_norm_bound_alternate: 1.0 / (n_min * s_min),
        initial_stack_error,
    };

    let certificate = ConvergenceCertificate {
        constants,
        equilibria: equilibria_pair,
        connectivity,
        neighborhood_overlap,
        discriminant,
        g_norm_window,
        alpha_window,
        expansion,
        step_size_smallness,
        initial_error,
        overall: false,
        diagnostics,
    };
    let overall = certificate.flags().iter().all(|(_, flag)| flag.pass);
    Ok(ConvergenceCertificate {
        overall,
        ..certificate
    })
}

/// Evaluates the pairwise step-size growth condition
/// `alpha ((1 + alpha theta)^(I+1) - (1 + alpha theta))` against the
/// per-pair budget
/// `(n_l s_min^2 - x s_max^2) / (n_kl gF (n_l + 3 x) s_max eps_max)`
/// where `x` is the summed exclusive-neighbor count, reporting the
/// tightest pair.
fn step_size_flag(
    bounds: &BoundsProfile,
    constants: &LemmaConstants,
    stats: &NeighborhoodStats,
    alpha: f64,
    horizon: usize,
) -> ConditionFlag {
    if constants.pair_constants.is_empty() {
        return ConditionFlag::new(true, None, "single node: no pairwise growth constraint");
    }

    let s_min2 = bounds.node_gain_min * bounds.node_gain_min;
    let s_max2 = bounds.node_gain_max * bounds.node_gain_max;
    let mut pass = true;
    // Worst pair: any failing pair outranks every passing one, then the
    // smallest slack wins; NaN slack (a fully degenerate budget) is
    // treated as the worst possible.
    let mut worst: Option<(bool, f64, usize, usize, f64, f64)> = None;
    for pair in &constants.pair_constants {
        let growth = 1.0 + alpha * pair.theta;
        let lhs = alpha * (growth.powi(horizon as i32 + 1) - growth);

        let n_kl = stats.shared(pair.k, pair.l) as f64;
        let n_l = stats.size(pair.l) as f64;
        let exclusive = (stats.exclusive(pair.k, pair.l) + stats.exclusive(pair.l, pair.k)) as f64;
        let numerator = n_l * s_min2 - exclusive * s_max2;
        let denominator = n_kl
            * bounds.normal_matrix_lipschitz
            * (n_l + 3.0 * exclusive)
            * bounds.node_gain_max
            * bounds.node_residual_max;
        let rhs = numerator / denominator;

        let ok = lhs < rhs;
        pass &= ok;
        let slack = rhs - lhs;
        let key = if slack.is_nan() { f64::NEG_INFINITY } else { slack };
        let replace = match &worst {
            None => true,
            Some((worst_ok, worst_key, ..)) => {
                (!ok && *worst_ok) || (ok == *worst_ok && key < *worst_key)
            }
        };
        if replace {
            worst = Some((ok, key, pair.k, pair.l, lhs, rhs));
        }
    }
    let (_, _, k, l, lhs, rhs) = worst.expect("at least one pair");
    ConditionFlag::new(
        pass,
        finite(rhs - lhs),
        format!(
            "tightest pair ({k}, {l}): growth {lhs:.6e} vs budget {rhs:.6e} over {horizon} iterations"
        ),
    )
}
