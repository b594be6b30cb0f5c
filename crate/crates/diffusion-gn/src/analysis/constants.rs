//! The constant chain of the convergence theory.
//!
//! From sampled bounds and neighborhood statistics this module derives, in
//! order:
//!
//! * `t1`, `t2`: coefficients of the network error recursion
//!   `e_{i+1} <= t1 |G|^2 e_i^2 + t2 |G| e_i + alpha xi`;
//! * per-pair `a1`, `a2`: coefficients of the node-gap recursion
//!   `|x_l - x_k| <= Pi^i` with `Pi^i = a2 (1 + a1 + ... + a1^{i-1})`;
//! * `zeta_i`: the expansion margin that must stay below 1 for the
//!   Neumann-series argument behind the discrepancy bound;
//! * `xi`: the bound on the cooperative/non-cooperative descent gap
//!   `|D_G - d_G|`, taken as the supremum over the analysis horizon.
//!
//! All functions are pure; worst cases are taken over ordered node pairs,
//! which preserves the sufficiency direction of every condition.

use super::AnalysisError;
use crate::network::NeighborhoodStats;
use crate::problem::BoundsProfile;
use serde::{Deserialize, Serialize};

/// Coefficients of the network error recursion.
///
/// `t1 = alpha w / (2 S_min)` and
/// `t2 = (1 - alpha) S_max / S_min + sqrt(2) N alpha w e_min / S_min^2`,
/// where `w` is the stacked-Jacobian Lipschitz constant, `S_min`/`S_max`
/// the extreme stacked singular values, and `e_min` the residual floor.
pub fn lemma1_constants(bounds: &BoundsProfile, alpha: f64, n: usize) -> (f64, f64) {
    let s_min = bounds.stack_gain_min;
    let t1 = alpha * bounds.jacobian_lipschitz / (2.0 * s_min);
    let t2 = (1.0 - alpha) * bounds.stack_gain_max / s_min
        + std::f64::consts::SQRT_2
            * n as f64
            * alpha
            * bounds.jacobian_lipschitz
            * bounds.neighborhood_residual_min
            / (s_min * s_min);
    (t1, t2)
}

/// Coefficients of the node-gap recursion for the ordered pair `(k, l)`.
///
/// `a1 = 1 + (alpha n_kl + 2 alpha n_kl g_f) / (2 n_l s_min^2)` and
/// `a2 = (n_l + 3 n_{k|l} + 3 n_{l|k}) alpha s_max eps_max / (2 n_l s_min^2)`,
/// with `n_kl` the shared-neighbor count, `n_{k|l}` the exclusive counts,
/// `g_f` the gradient Lipschitz constant, and `s`/`eps` the per-node gain
/// and residual envelopes.
pub fn lemma2_constants(
    bounds: &BoundsProfile,
    stats: &NeighborhoodStats,
    alpha: f64,
    k: usize,
    l: usize,
) -> (f64, f64) {
    let n_kl = stats.shared(k, l) as f64;
    let n_l = stats.size(l) as f64;
    let exclusive = (stats.exclusive(k, l) + stats.exclusive(l, k)) as f64;
    let s2 = bounds.node_gain_min * bounds.node_gain_min;
    let a1 = 1.0 + (alpha * n_kl + 2.0 * alpha * n_kl * bounds.gradient_lipschitz) / (2.0 * n_l * s2);
    let a2 = (n_l + 3.0 * exclusive) * alpha * bounds.node_gain_max * bounds.node_residual_max
        / (2.0 * n_l * s2);
    (a1, a2)
}

/// Step-size condition coefficient for the ordered pair `(k, l)`:
/// `theta = (n_kl + 2 n_kl g_f) / (2 n_l s_min^2)`.
pub fn pair_theta(bounds: &BoundsProfile, stats: &NeighborhoodStats, k: usize, l: usize) -> f64 {
    let n_kl = stats.shared(k, l) as f64;
    let n_l = stats.size(l) as f64;
    let s2 = bounds.node_gain_min * bounds.node_gain_min;
    (n_kl + 2.0 * n_kl * bounds.gradient_lipschitz) / (2.0 * n_l * s2)
}

/// Node-gap envelope `Pi^i = a2 sum_{j=1..i} a1^{j-1}` for `i` in
/// `0..=horizon`, computed by the running recursion `Pi^{i+1} = a2 + a1 Pi^i`
/// so the `a1 = 1` case needs no special branch. Entry 0 is the empty sum.
pub fn pi_sequence(a1: f64, a2: f64, horizon: usize) -> Vec<f64> {
    let mut pi = Vec::with_capacity(horizon + 1);
    pi.push(0.0);
    for i in 0..horizon {
        pi.push(a2 + a1 * pi[i]);
    }
    pi
}

/// Expansion margin and descent-discrepancy bound at one gap level.
///
/// `zeta = N n_max g_F Pi / s_min^2` must stay below 1; then
/// `xi = N^2 g_f Pi / s_min^2
///       + (N s_max eps_max + N^2 g_f Pi) zeta / (s_min^2 (1 - zeta))`.
pub fn discrepancy_bound(
    bounds: &BoundsProfile,
    stats: &NeighborhoodStats,
    pi_i: f64,
) -> Result<(f64, f64), AnalysisError> {
    let zeta = expansion_margin(bounds, stats, pi_i);
    if zeta >= 1.0 {
        return Err(AnalysisError::ExpansionConditionViolated { zeta });
    }
    let n = stats.node_count() as f64;
    let s2 = bounds.node_gain_min * bounds.node_gain_min;
    let gap_term = n * n * bounds.gradient_lipschitz * pi_i;
    let xi = gap_term / s2
        + (n * bounds.node_gain_max * bounds.node_residual_max + gap_term) * zeta
            / (s2 * (1.0 - zeta));
    Ok((zeta, xi))
}

fn expansion_margin(bounds: &BoundsProfile, stats: &NeighborhoodStats, pi_i: f64) -> f64 {
    let n = stats.node_count() as f64;
    let n_max = stats.max_size() as f64;
    let s2 = bounds.node_gain_min * bounds.node_gain_min;
    n * n_max * bounds.normal_matrix_lipschitz * pi_i / s2
}

/// Norm ratio governing the matrix-perturbation expansion for pair `(k, l)`
/// at gap level `Pi`: must stay below 1 for the inversion argument to hold.
pub fn pair_expansion_ratio(
    bounds: &BoundsProfile,
    stats: &NeighborhoodStats,
    pi_i: f64,
    k: usize,
    l: usize,
) -> f64 {
    let n_kl = stats.shared(k, l) as f64;
    let n_l = stats.size(l) as f64;
    let exclusive = (stats.exclusive(k, l) + stats.exclusive(l, k)) as f64;
    let s2 = bounds.node_gain_min * bounds.node_gain_min;
    let s_max2 = bounds.node_gain_max * bounds.node_gain_max;
    (n_kl * bounds.normal_matrix_lipschitz * pi_i + exclusive * s_max2) / (n_l * s2)
}

/// Recursion coefficients for one ordered node pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairConstants {
    pub k: usize,
    pub l: usize,
    pub a1: f64,
    pub a2: f64,
    pub theta: f64,
}

/// Every constant of the convergence chain, assembled network-wide.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaConstants {
    /// Quadratic coefficient of the error recursion.
    pub t1: f64,
    /// Linear coefficient of the error recursion.
    pub t2: f64,
    /// Per ordered pair `(k, l)`, `k != l`.
    pub pair_constants: Vec<PairConstants>,
    /// Worst-case node-gap coefficients over all ordered pairs.
    pub a1_max: f64,
    pub a2_max: f64,
    /// Worst-case step-size condition coefficient.
    pub theta: f64,
    /// `Pi^i` for `i` in `0..=horizon`, built from the worst-case pair.
    pub pi: Vec<f64>,
    /// Expansion margins `zeta_i` along `pi` (recorded even where >= 1).
    pub zeta: Vec<f64>,
    /// Worst-pair expansion ratios along `pi`.
    pub mu: Vec<f64>,
    /// Descent-discrepancy bound: supremum of `xi_i` over the horizon, or
    /// `None` when some `zeta_i >= 1` makes it undefined.
    pub xi: Option<f64>,
    pub alpha: f64,
    pub horizon: usize,
}

/// Assembles the full constant chain for a network, collapsing per-pair
/// quantities to their worst case. A single-node network has no pairs: the
/// gap envelope is identically zero and `xi = 0`.
pub fn network_constants(
    bounds: &BoundsProfile,
    stats: &NeighborhoodStats,
    alpha: f64,
    horizon: usize,
) -> LemmaConstants {
    let n = stats.node_count();
    let (t1, t2) = lemma1_constants(bounds, alpha, n);

    let mut pair_constants = Vec::new();
    for k in 0..n {
        for l in 0..n {
            if l == k {
                continue;
            }
            let (a1, a2) = lemma2_constants(bounds, stats, alpha, k, l);
            let theta = pair_theta(bounds, stats, k, l);
            pair_constants.push(PairConstants { k, l, a1, a2, theta });
        }
    }
    let a1_max = pair_constants.iter().map(|p| p.a1).fold(1.0, f64::max);
    let a2_max = pair_constants.iter().map(|p| p.a2).fold(0.0, f64::max);
    let theta = pair_constants.iter().map(|p| p.theta).fold(0.0, f64::max);

    let pi = pi_sequence(a1_max, a2_max, horizon);
    let zeta: Vec<f64> = pi.iter().map(|&p| expansion_margin(bounds, stats, p)).collect();
    let mu: Vec<f64> = pi
        .iter()
        .map(|&p| {
            pair_constants
                .iter()
                .map(|pc| pair_expansion_ratio(bounds, stats, p, pc.k, pc.l))
                .fold(0.0, f64::max)
        })
        .collect();

    // Pi grows with i, so the supremum of xi_i sits at the horizon; walking
    // the whole sequence keeps that fact checked rather than assumed.
    let mut xi = Some(0.0_f64);
    for &p in &pi {
        match (xi, discrepancy_bound(bounds, stats, p)) {
            (Some(current), Ok((_, xi_i))) => xi = Some(current.max(xi_i)),
            _ => {
                xi = None;
                break;
            }
        }
    }

    LemmaConstants {
        t1,
        t2,
        pair_constants,
        a1_max,
        a2_max,
        theta,
        pi,
        zeta,
        mu,
        xi,
        alpha,
        horizon,
    }
}
