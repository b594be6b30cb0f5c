//! Fixed points and stability of the scalar error recursion.
//!
//! The network error obeys `e_{i+1} <= phi(e_i)` with
//! `phi(y) = t1 g^2 y^2 + t2 g y + alpha xi`, where `g` is the operator
//! norm of the extended combination matrix. Fixed points of `phi` solve
//!
//! ```text
//!     t1 g^2 y^2 - (1 - t2 g) y + alpha xi = 0,
//! ```
//!
//! giving a lower (attracting) and an upper (repelling) equilibrium when
//! the discriminant `(1 - t2 g)^2 - 4 t1 alpha xi g^2` is positive. The
//! attracting point is where the error settles; the repelling point bounds
//! the basin the initial error must start inside.

use super::AnalysisError;
use serde::{Deserialize, Serialize};

/// The two fixed points of the scalar error map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumPair {
    /// Lower fixed point; attracting when the derivative test passes.
    pub y_min: f64,
    /// Upper fixed point, bounding the basin of attraction. Infinite when
    /// the quadratic coefficient vanishes (affine map, global basin).
    pub y_max: f64,
    /// `(1 - t2 g)^2 - 4 t1 alpha xi g^2`.
    pub discriminant: f64,
}

/// Stability verdict and the derived parameter windows.
///
/// `stable` is the direct derivative test at the lower fixed point and is
/// the decision the certificate trusts; the windows are algebraic
/// rearrangements reported for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityWindows {
    /// Derivative test at the attracting point: `|1 - sqrt(disc)| < 1`,
    /// which for an affine map (`t1 = 0`) reduces to `|t2 g| < 1`.
    pub stable: bool,
    /// Sufficient operator-norm ceiling `1 / (t2 + 2 sqrt(t1 alpha xi))`.
    /// This is the smaller root of `disc(g) = 0` in `g`; since
    /// `disc(0) = 1` and no root is crossed below it, every norm under the
    /// ceiling keeps the discriminant inside `(0, 1]` and the attracting
    /// point stable.
    pub g_norm_ceiling: f64,
    /// Diagnostic norm interval `(lo, hi)` with
    /// `lo = 1 / (t2 + 2 sqrt(t1 alpha xi))` and
    /// `hi = (t2 + 2 sqrt(t2^2 - t1 alpha xi)) / (t2^2 - 4 t1 alpha xi)`.
    /// These are the bounds obtained by rearranging `disc(g) = 0` into
    /// constraints on `g`, but the rearrangement flips direction: the
    /// interior of the interval is (up to rounding in `hi`) where the
    /// discriminant dips negative, not where the system is stable. The
    /// endpoints are reported verbatim for comparison, non-finite values
    /// included; `g_norm_ceiling` is the operative bound.
    pub g_window: (f64, f64),
    /// Step-size window `(lo, hi)` with
    /// `lo = max((t2^2 g^2 - 2 t2 g - 3) / (4 t1 xi g^2), 0)` and
    /// `hi = (t2^2 g^2 - 2 t2 g + 1) / (4 t1 xi g^2)`. Holding `t1`, `t2`,
    /// `xi`, `g` fixed, `alpha` lies strictly inside this window exactly
    /// when the discriminant lies in `(0, 4)`, which is the derivative
    /// test again, so this window is exact rather than merely sufficient.
    /// The upper end is infinite when `t1 xi = 0`; the solver's own
    /// contract caps usable step sizes at one independently.
    pub alpha_window: (f64, f64),
}

fn check_finite(name: &str, value: f64) -> Result<(), AnalysisError> {
    if !value.is_finite() || value < 0.0 {
        return Err(AnalysisError::BadInput(format!(
            "{name} must be finite and nonnegative, got {value}"
        )));
    }
    Ok(())
}

/// Computes both fixed points of the scalar error map.
///
/// The roots are evaluated in the cancellation-free arrangement: with
/// `s = 1 - t2 g` and `r = sqrt(disc)`, the root `(s + r) / (2 t1 g^2)`
/// is safe when `s >= 0` and the other is recovered through the product
/// of roots `alpha xi / (t1 g^2)`; the roles swap when `s < 0`.
///
/// Errors with [`AnalysisError::NoRealEquilibrium`] when the discriminant
/// is negative, and with [`AnalysisError::BadInput`] for out-of-range
/// inputs or the degenerate affine map whose slope `t2 g >= 1` leaves no
/// attracting fixed point.
pub fn equilibria(
    t1: f64,
    t2: f64,
    g_norm: f64,
    alpha: f64,
    xi: f64,
) -> Result<EquilibriumPair, AnalysisError> {
    check_finite("t1", t1)?;
    check_finite("t2", t2)?;
    check_finite("alpha", alpha)?;
    check_finite("xi", xi)?;
    if !g_norm.is_finite() || g_norm <= 0.0 {
        return Err(AnalysisError::BadInput(format!(
            "g_norm must be finite and positive, got {g_norm}"
        )));
    }

    let s = 1.0 - t2 * g_norm;
    let discriminant = s * s - 4.0 * t1 * alpha * xi * g_norm * g_norm;
    if discriminant < 0.0 {
        return Err(AnalysisError::NoRealEquilibrium { discriminant });
    }
    let root = discriminant.sqrt();

    if t1 == 0.0 {
        // Affine map: one fixed point at alpha xi / s, attracting from
        // everywhere when the slope is below one.
        if s <= 0.0 {
            return Err(AnalysisError::BadInput(format!(
                "affine error map with slope t2 g = {} has no attracting fixed point",
                t2 * g_norm
            )));
        }
        return Ok(EquilibriumPair {
            y_min: alpha * xi / s,
            y_max: f64::INFINITY,
            discriminant,
        });
    }

    let scale = 2.0 * t1 * g_norm * g_norm;
    let (y_min, y_max) = if s >= 0.0 {
        let y_max = (s + root) / scale;
        let y_min = if s + root > 0.0 {
            2.0 * alpha * xi / (s + root)
        } else {
            // s = root = 0: a double root at the origin.
            0.0
        };
        (y_min, y_max)
    } else {
        let y_min = (s - root) / scale;
        (y_min, 2.0 * alpha * xi / (s - root))
    };

    Ok(EquilibriumPair {
        y_min,
        y_max,
        discriminant,
    })
}

/// Evaluates the stability verdict and the derived parameter windows.
///
/// Unlike [`equilibria`] this never fails: when the discriminant is
/// negative there is nothing to attract and `stable` is simply false,
/// while the window endpoints remain well defined (possibly non-finite)
/// and are reported as computed.
pub fn stability_windows(t1: f64, t2: f64, g_norm: f64, alpha: f64, xi: f64) -> StabilityWindows {
    let s = 1.0 - t2 * g_norm;
    let discriminant = s * s - 4.0 * t1 * alpha * xi * g_norm * g_norm;

    let stable = if t1 == 0.0 {
        (t2 * g_norm).abs() < 1.0
    } else {
        discriminant > 0.0 && (1.0 - discriminant.sqrt()).abs() < 1.0
    };

    let strength = t1 * alpha * xi;
    let g_norm_ceiling = 1.0 / (t2 + 2.0 * strength.sqrt());
    let g_hi = (t2 + 2.0 * (t2 * t2 - strength).sqrt()) / (t2 * t2 - 4.0 * strength);

    let tg = t2 * g_norm;
    let denom = 4.0 * t1 * xi * g_norm * g_norm;
    let alpha_lo = ((tg * tg - 2.0 * tg - 3.0) / denom).max(0.0);
    let alpha_hi = (tg * tg - 2.0 * tg + 1.0) / denom;

    StabilityWindows {
        stable,
        g_norm_ceiling,
        g_window: (g_norm_ceiling, g_hi),
        alpha_window: (alpha_lo, alpha_hi),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn phi(t1: f64, t2: f64, g: f64, alpha: f64, xi: f64, y: f64) -> f64 {
        t1 * g * g * y * y + t2 * g * y + alpha * xi
    }

    #[test]
    fn quadratic_roots_match_the_hand_solved_pair() {
        // disc = 0.75^2 - 0.36 = 0.2025, roots (0.75 +/- 0.45) / 2.
        let pair = equilibria(1.0, 0.25, 1.0, 0.3, 0.3).unwrap();
        assert_relative_eq!(pair.discriminant, 0.2025, epsilon = 1e-15);
        assert_relative_eq!(pair.y_min, 0.15, epsilon = 1e-14);
        assert_relative_eq!(pair.y_max, 0.6, epsilon = 1e-14);
    }

    #[test]
    fn zero_offset_puts_the_lower_point_at_the_origin() {
        let pair = equilibria(2.0, 0.5, 1.0, 0.7, 0.0).unwrap();
        assert_eq!(pair.y_min, 0.0, "no offset means the origin is fixed");
        assert_relative_eq!(pair.y_max, 0.25, epsilon = 1e-15);
    }

    #[test]
    fn negative_discriminant_is_reported_not_papered_over() {
        match equilibria(1.0, 0.0, 1.0, 1.0, 1.0) {
            Err(AnalysisError::NoRealEquilibrium { discriminant }) => {
                assert_relative_eq!(discriminant, -3.0, epsilon = 1e-15);
            }
            other => panic!("expected NoRealEquilibrium, got {other:?}"),
        }
    }

    #[test]
    fn boundary_discriminant_collapses_the_pair() {
        // t2 = 0, alpha xi = 0.25: disc = 1 - 1 = 0, double root at 0.5.
        let pair = equilibria(1.0, 0.0, 1.0, 0.5, 0.5).unwrap();
        assert_eq!(pair.discriminant, 0.0);
        assert_relative_eq!(pair.y_min, 0.5, epsilon = 1e-14);
        assert_relative_eq!(pair.y_min, pair.y_max, epsilon = 1e-14);
        let windows = stability_windows(1.0, 0.0, 1.0, 0.5, 0.5);
        assert!(!windows.stable, "a double root sits on the stability boundary");
    }

    #[test]
    fn steep_linear_term_flips_both_roots_negative() {
        // t2 g = 3.1 with xi = 0: disc = 4.41, roots 0 and -2.1, and the
        // derivative test 1.1 > 1 says unstable.
        let pair = equilibria(1.0, 3.1, 1.0, 0.5, 0.0).unwrap();
        assert_relative_eq!(pair.discriminant, 4.41, epsilon = 1e-12);
        assert_relative_eq!(pair.y_min, -2.1, epsilon = 1e-12);
        assert_eq!(pair.y_max, 0.0);
        assert!(!stability_windows(1.0, 3.1, 1.0, 0.5, 0.0).stable);
    }

    #[test]
    fn affine_map_keeps_a_fixed_point_and_an_unbounded_basin() {
        let pair = equilibria(0.0, 0.5, 1.0, 0.5, 1.0).unwrap();
        assert_relative_eq!(pair.y_min, 1.0, epsilon = 1e-15);
        assert!(pair.y_max.is_infinite());
        assert!(stability_windows(0.0, 0.5, 1.0, 0.5, 1.0).stable);

        // Slope above one: divergent, no attracting point to report.
        assert!(matches!(
            equilibria(0.0, 1.5, 1.0, 0.5, 1.0),
            Err(AnalysisError::BadInput(_))
        ));
        assert!(!stability_windows(0.0, 1.5, 1.0, 0.5, 1.0).stable);
    }

    #[test]
    fn bad_inputs_are_rejected() {
        assert!(matches!(
            equilibria(1.0, 0.25, 0.0, 0.3, 0.3),
            Err(AnalysisError::BadInput(_))
        ));
        assert!(matches!(
            equilibria(-1.0, 0.25, 1.0, 0.3, 0.3),
            Err(AnalysisError::BadInput(_))
        ));
        assert!(matches!(
            equilibria(1.0, f64::NAN, 1.0, 0.3, 0.3),
            Err(AnalysisError::BadInput(_))
        ));
    }

    #[test]
    fn stability_verdict_matches_the_hand_worked_example() {
        let windows = stability_windows(1.0, 0.25, 1.0, 0.3, 0.3);
        assert!(windows.stable, "disc = 0.2025 gives |1 - 0.45| < 1");
        assert_relative_eq!(windows.g_norm_ceiling, 1.0 / 0.85, epsilon = 1e-14);
        // Step-size window: lower clamp hits zero, upper is
        // (1 - t2 g)^2 / (4 t1 xi g^2) = 0.5625 / 1.2.
        assert_eq!(windows.alpha_window.0, 0.0);
        assert_relative_eq!(windows.alpha_window.1, 0.46875, epsilon = 1e-14);
    }

    #[test]
    fn alpha_window_boundary_is_exactly_the_zero_discriminant() {
        let (t1, t2, g, xi) = (1.0, 0.25, 1.0, 0.3);
        let hi = stability_windows(t1, t2, g, 0.3, xi).alpha_window.1;
        let boundary = equilibria(t1, t2, g, hi, xi).unwrap();
        assert_relative_eq!(boundary.discriminant, 0.0, epsilon = 1e-13);
        // Just inside the window the discriminant reopens.
        let inside = equilibria(t1, t2, g, hi - 1e-6, xi).unwrap();
        assert!(inside.discriminant > 0.0);
    }

    #[test]
    fn norm_ceiling_is_the_smaller_discriminant_root() {
        // t2 = 1, t1 alpha xi = 0.16: roots of disc(g) = 0 are
        // 1/(1 + 0.8) and 1/(1 - 0.8).
        let (t1, t2, alpha, xi) = (1.0, 1.0, 0.4, 0.4);
        let windows = stability_windows(t1, t2, 1.0, alpha, xi);
        assert_relative_eq!(windows.g_norm_ceiling, 1.0 / 1.8, epsilon = 1e-14);

        let disc = |g: f64| {
            let s = 1.0 - t2 * g;
            s * s - 4.0 * t1 * alpha * xi * g * g
        };
        assert_relative_eq!(disc(windows.g_norm_ceiling), 0.0, epsilon = 1e-13);
        assert!(disc(0.99 * windows.g_norm_ceiling) > 0.0);
        // Between the two roots the discriminant is negative, which is why
        // the diagnostic interval must not be read as an admissible range.
        assert!(disc(2.0) < 0.0);
        let (lo, hi) = windows.g_window;
        assert!(lo < 2.0 && 2.0 < hi, "the dip sits inside the interval");
    }

    #[test]
    fn degenerate_coefficients_open_the_windows_fully() {
        // t1 = 0 kills both the ceiling denominator term and the alpha
        // window curvature: any norm below 1/t2 works and every step size
        // is admissible.
        let windows = stability_windows(0.0, 0.5, 1.0, 0.5, 0.0);
        assert_relative_eq!(windows.g_norm_ceiling, 2.0, epsilon = 1e-15);
        assert_eq!(windows.alpha_window.0, 0.0);
        assert!(windows.alpha_window.1.is_infinite());

        let windows = stability_windows(0.0, 0.0, 1.0, 0.5, 0.0);
        assert!(windows.g_norm_ceiling.is_infinite());
        assert!(windows.stable);
    }

    proptest! {
        #[test]
        fn roots_substitute_back_into_the_map(
            t1 in 0.01f64..10.0,
            t2 in 0.0f64..1.5,
            g in 0.1f64..2.0,
            alpha in 0.05f64..1.0,
            xi in 0.0f64..5.0,
        ) {
            let pair = match equilibria(t1, t2, g, alpha, xi) {
                Ok(pair) => pair,
                Err(AnalysisError::NoRealEquilibrium { .. }) => {
                    return Ok(());
                }
                Err(other) => panic!("unexpected failure: {other}"),
            };
            prop_assume!(pair.y_max.abs() <= 50.0);
            prop_assert!(pair.y_min <= pair.y_max);
            for y in [pair.y_min, pair.y_max] {
                let image = phi(t1, t2, g, alpha, xi, y);
                prop_assert!(
                    (image - y).abs() <= 1e-10,
                    "fixed point drifted: y = {}, phi(y) = {}",
                    y,
                    image
                );
            }
        }

        #[test]
        fn norms_below_the_ceiling_are_stable(
            t1 in 0.01f64..10.0,
            t2 in 0.05f64..1.5,
            alpha in 0.05f64..1.0,
            xi in 0.0f64..5.0,
            fraction in 0.05f64..0.95,
        ) {
            let ceiling = stability_windows(t1, t2, 1.0, alpha, xi).g_norm_ceiling;
            prop_assume!(ceiling.is_finite());
            let g = fraction * ceiling;
            prop_assume!(g > 0.0);
            let windows = stability_windows(t1, t2, g, alpha, xi);
            prop_assert!(
                windows.stable,
                "g = {} under ceiling {} must be stable",
                g,
                ceiling
            );
        }
    }
}
