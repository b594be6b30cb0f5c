//! Acceptance suite: one test per release criterion, each printing a single
//! verdict line (visible with `--nocapture`, or on any failure).
//!
//! The criteria pin the toolkit end to end: exact one-step behavior on
//! linear problems, collapse of the three modes in degenerate settings,
//! Jacobian consistency of every generator, the combination-matrix
//! contract over a large random topology sample, a clean inequality audit
//! on a certified instance, convergence inside the certified basin, the
//! cooperative accuracy advantage over seeds, and exact-rational oracle
//! recomputation of every analysis formula.

use diffusion_gn::analysis::{
    audit_trace, certify, discrepancy_bound, equilibria, lemma1_constants, lemma2_constants,
    pi_sequence,
};
use diffusion_gn::network::{
    combination_matrix, neighborhood_stats, spectral_radius, CombinationMatrix, WeightRule,
};
use diffusion_gn::problem::{
    estimate_bounds_with_safety, make_problem, max_jacobian_deviation, BoundsProfile,
};
use diffusion_gn::solvers::{run, AdaptAt};
use diffusion_gn::{Mode, ProblemKind, RunTrace, SolverConfig, Topology};
use num::{BigInt, BigRational, ToPrimitive};

fn verdict(name: &str, pass: bool, detail: &str) {
    let flag = if pass { "PASS" } else { "FAIL" };
    println!("acceptance {name}: {flag} ({detail})");
    assert!(pass, "criterion '{name}' failed: {detail}");
}

// ---------------------------------------------------------------------------
// shared builders
// ---------------------------------------------------------------------------

/// The certified localization instance used by the audit and convergence
/// criteria: every certificate condition passes for it.
struct Certified {
    problem: diffusion_gn::NlsProblem,
    weights: CombinationMatrix,
    config: SolverConfig,
    x0: nalgebra::DVector<f64>,
    bounds: BoundsProfile,
}

fn certified_instance(max_iters: usize) -> Certified {
    let problem =
        make_problem(ProblemKind::Localization, 6, 2, 0.01, 31).expect("instance builds");
    let topology = Topology::complete(6).expect("complete graph builds");
    let weights = combination_matrix(&topology, WeightRule::Uniform);
    let config = SolverConfig::new(Mode::Diffusion, 0.02, max_iters, 0.0).expect("valid config");
    let x0 = problem
        .domain()
        .point_at(&[0.9, 0.9])
        .expect("start inside the domain");
    let bounds =
        estimate_bounds_with_safety(&problem, 200, 11, 1.005).expect("bounds estimate");
    Certified {
        problem,
        weights,
        config,
        x0,
        bounds,
    }
}

fn max_state_diff(a: &RunTrace, b: &RunTrace) -> f64 {
    assert_eq!(a.records.len(), b.records.len(), "trace lengths differ");
    a.records
        .iter()
        .zip(&b.records)
        .map(|(ra, rb)| (&ra.state - &rb.state).abs().max())
        .fold(0.0, f64::max)
}

fn states_bitwise_equal(a: &RunTrace, b: &RunTrace) -> bool {
    a.records.len() == b.records.len()
        && a.records.iter().zip(&b.records).all(|(ra, rb)| {
            ra.state
                .iter()
                .zip(rb.state.iter())
                .all(|(x, y)| x.to_bits() == y.to_bits())
        })
}

// ---------------------------------------------------------------------------
// criteria 1-2: exact degenerate behavior
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_linear_problems_converge_in_one_step() {
    let problem = make_problem(ProblemKind::Linear, 5, 3, 0.0, 7).expect("instance builds");
    let topology = Topology::complete(5).expect("complete graph builds");
    let weights = combination_matrix(&topology, WeightRule::Uniform);
    let x0 = problem
        .domain()
        .point_at(&[0.9, 0.1, 0.9])
        .expect("start inside the domain");

    let mut errors = Vec::new();
    for mode in [Mode::Centralized, Mode::Diffusion] {
        let config = SolverConfig::new(mode, 1.0, 3, 0.0).expect("valid config");
        let trace = run(&problem, &weights, &config, &x0).expect("run completes");
        assert!(
            trace.records[0].global_error > 1e-3,
            "start must be far from the minimizer for the one-step claim to mean anything"
        );
        errors.push(trace.records[1].global_error);
    }

    let pass = errors.iter().all(|&e| e <= 1e-10);
    verdict(
        "linear one-step",
        pass,
        &format!(
            "errors after one full Gauss-Newton update: centralized {:.2e}, diffusion {:.2e}",
            errors[0], errors[1]
        ),
    );
}

#[test]
fn criterion_2_modes_collapse_in_degenerate_settings() {
    // Part 1: a single node makes the three strategies the same algorithm.
    let problem = make_problem(ProblemKind::ScalarSqrt, 1, 1, 0.0, 5).expect("instance builds");
    let topology = Topology::complete(1).expect("single node builds");
    let weights = combination_matrix(&topology, WeightRule::Uniform);
    let x0 = problem.domain().point_at(&[0.8]).expect("start in domain");
    let traces: Vec<RunTrace> = [Mode::Centralized, Mode::NonCooperative, Mode::Diffusion]
        .into_iter()
        .map(|mode| {
            let config = SolverConfig::new(mode, 0.6, 30, 0.0).expect("valid config");
            run(&problem, &weights, &config, &x0).expect("run completes")
        })
        .collect();
    let single_node_diff = max_state_diff(&traces[0], &traces[1])
        .max(max_state_diff(&traces[0], &traces[2]));

    // Part 2: identity weights turn diffusion into the non-cooperative
    // strategy. With the adapt phase at the own aggregate this is exact
    // from any state; the literal neighbor-aggregate rule reads neighbor
    // estimates that an identity combine no longer equalizes, so its
    // guarantee is the first update from a consensus start, or every
    // update when consensus is preserved (a complete graph).
    let problem = make_problem(ProblemKind::Localization, 4, 2, 0.01, 3).expect("instance builds");
    let ring = Topology::ring(4).expect("ring builds");
    let identity = CombinationMatrix::identity(&ring);
    let x0 = problem
        .domain()
        .point_at(&[0.7, 0.6])
        .expect("start in domain");

    let noncoop_config = SolverConfig::new(Mode::NonCooperative, 0.1, 15, 0.0).expect("config");
    let noncoop = run(&problem, &identity, &noncoop_config, &x0).expect("run completes");

    let own_config = SolverConfig::new(Mode::Diffusion, 0.1, 15, 0.0)
        .expect("config")
        .with_adapt_at(AdaptAt::OwnAggregate);
    let own = run(&problem, &identity, &own_config, &x0).expect("run completes");
    let own_bitwise = states_bitwise_equal(&noncoop, &own);

    let literal_config = SolverConfig::new(Mode::Diffusion, 0.1, 15, 0.0).expect("config");
    let literal = run(&problem, &identity, &literal_config, &x0).expect("run completes");
    let literal_first_update = literal.records[1]
        .state
        .iter()
        .zip(noncoop.records[1].state.iter())
        .all(|(x, y)| x.to_bits() == y.to_bits());

    let complete = Topology::complete(4).expect("complete graph builds");
    let identity_complete = CombinationMatrix::identity(&complete);
    let noncoop_c = run(&problem, &identity_complete, &noncoop_config, &x0).expect("run");
    let literal_c = run(&problem, &identity_complete, &literal_config, &x0).expect("run");
    let literal_complete_bitwise = states_bitwise_equal(&noncoop_c, &literal_c);

    let pass = single_node_diff == 0.0
        && own_bitwise
        && literal_first_update
        && literal_complete_bitwise;
    verdict(
        "mode collapse",
        pass,
        &format!(
            "single-node max diff {single_node_diff:.1e}; identity-weight equivalence: \
             own-aggregate full trace {own_bitwise}, literal first update {literal_first_update}, \
             literal on complete graph {literal_complete_bitwise}"
        ),
    );
}

// ---------------------------------------------------------------------------
// criterion 3: generator Jacobians
// ---------------------------------------------------------------------------

#[test]
fn criterion_3_every_generator_passes_the_finite_difference_check() {
    let cases = [
        (ProblemKind::Linear, 5, 3, 0.0),
        (ProblemKind::Linear, 8, 2, 0.3),
        (ProblemKind::ScalarSqrt, 4, 1, 0.05),
        (ProblemKind::ExponentialFit, 6, 2, 0.02),
        (ProblemKind::Localization, 6, 2, 0.01),
        (ProblemKind::Localization, 10, 2, 0.1),
    ];
    let mut worst = 0.0_f64;
    let mut worst_label = String::new();
    for (kind, n, m, noise) in cases {
        let problem = make_problem(kind, n, m, noise, 17).expect("instance builds");
        let deviation =
            max_jacobian_deviation(&problem, 100, 23).expect("finite differences evaluate");
        if deviation > worst {
            worst = deviation;
            worst_label = problem.label().to_string();
        }
    }
    verdict(
        "jacobian consistency",
        worst <= 1e-5,
        &format!("worst relative deviation {worst:.2e} at 100 points per instance ({worst_label})"),
    );
}

// ---------------------------------------------------------------------------
// criterion 4: combination-matrix contract
// ---------------------------------------------------------------------------

#[test]
fn criterion_4_combination_matrices_obey_the_contract_on_random_topologies() {
    let mut checked = 0;
    let mut worst_row_sum = 0.0_f64;
    let mut worst_rho = 0.0_f64;
    let mut worst_extension = 0.0_f64;
    for i in 0..1000 {
        let n = 2 + i % 11;
        let radius = 0.25 + 0.07 * (i % 13) as f64;
        let topology =
            Topology::random_geometric(n, radius, 40_000 + i as u64).expect("topology builds");
        for rule in [WeightRule::Uniform, WeightRule::Metropolis] {
            let weights = combination_matrix(&topology, rule);
            let c = weights.matrix();
            for k in 0..n {
                let mut row_sum = 0.0;
                for l in 0..n {
                    let w = c[(k, l)];
                    assert!(w >= 0.0, "negative weight at ({k}, {l}) under {rule}");
                    if k != l && !topology.adjacent(k, l) {
                        assert!(
                            w == 0.0,
                            "weight {w} outside the neighborhood pattern at ({k}, {l})"
                        );
                    }
                    row_sum += w;
                }
                worst_row_sum = worst_row_sum.max((row_sum - 1.0).abs());
            }
            let rho = spectral_radius(c).expect("spectral radius converges");
            worst_rho = worst_rho.max((rho - 1.0).abs());
            for m in 1..=3 {
                let rho_ext =
                    spectral_radius(&weights.extended(m)).expect("spectral radius converges");
                worst_extension = worst_extension.max((rho_ext - rho).abs());
            }
            checked += 1;
        }
    }
    let pass = checked == 2000
        && worst_row_sum <= 1e-12
        && worst_rho <= 1e-8
        && worst_extension <= 1e-8;
    verdict(
        "combination-matrix conditions",
        pass,
        &format!(
            "{checked} matrices; worst row-sum deviation {worst_row_sum:.1e}, \
             worst |rho - 1| {worst_rho:.1e}, worst extension drift {worst_extension:.1e}"
        ),
    );
}

// ---------------------------------------------------------------------------
// criteria 5-6: certificate against reality
// ---------------------------------------------------------------------------

#[test]
fn criterion_5_certified_instance_audits_clean_for_fifty_iterations() {
    let parts = certified_instance(50);
    let certificate = certify(
        &parts.problem,
        &parts.weights,
        &parts.config,
        &parts.x0,
        50,
        &parts.bounds,
    )
    .expect("certification runs");
    assert!(certificate.overall, "instance is expected to certify");

    let trace = run(&parts.problem, &parts.weights, &parts.config, &parts.x0)
        .expect("run completes");
    let report = audit_trace(&parts.problem, &trace, &certificate, &parts.weights, &parts.bounds)
        .expect("trace audits");

    let failures = report.failures().len();
    let xi = report.xi;
    let pass = report.iterations >= 50
        && report.all_pass
        && failures == 0
        && report.max_descent_gap <= xi;
    verdict(
        "inequality audit",
        pass,
        &format!(
            "{} iterations, {} rows, {failures} failures, max descent gap {:.2e} <= xi {:.2e}",
            report.iterations,
            report.rows.len(),
            report.max_descent_gap,
            xi
        ),
    );
}

#[test]
fn criterion_6_certificate_predicts_convergence_and_rejects_disconnection() {
    let parts = certified_instance(1200);
    let certificate = certify(
        &parts.problem,
        &parts.weights,
        &parts.config,
        &parts.x0,
        50,
        &parts.bounds,
    )
    .expect("certification runs");
    assert!(certificate.overall, "instance is expected to certify");
    let pair = certificate.equilibria.expect("certified instance has equilibria");
    let initial = certificate.diagnostics.initial_stack_error;
    assert!(
        initial < pair.y_max,
        "start must sit inside the certified basin: {initial} vs y_max {}",
        pair.y_max
    );

    let trace = run(&parts.problem, &parts.weights, &parts.config, &parts.x0)
        .expect("run completes");
    let final_error = trace.final_global_error();
    let converged = final_error <= 1e-6;

    // A disconnected network voids the certificate regardless of the rest.
    let split = Topology::from_edges(6, &[(0, 1), (1, 2), (3, 4), (4, 5)])
        .expect("disconnected topology builds");
    let split_weights = combination_matrix(&split, WeightRule::Uniform);
    let split_certificate = certify(
        &parts.problem,
        &split_weights,
        &parts.config,
        &parts.x0,
        50,
        &parts.bounds,
    )
    .expect("certification still evaluates");
    let rejected = !split_certificate.overall;

    verdict(
        "convergence under certificate",
        converged && rejected,
        &format!(
            "basin start {initial:.3} < y_max {:.3}, final error {final_error:.2e} \
             after {} iterations; disconnected instance rejected: {rejected}",
            pair.y_max,
            trace.iterations()
        ),
    );
}

// ---------------------------------------------------------------------------
// criterion 7: cooperation benefit over seeds
// ---------------------------------------------------------------------------

#[test]
fn criterion_7_diffusion_beats_noncooperative_across_seeded_instances() {
    let nodes = 6;
    let topology = Topology::ring(nodes).expect("ring builds");
    let weights = combination_matrix(&topology, WeightRule::Uniform);
    let mut wins = 0;
    let mut reductions = 0;
    for seed in 1..=20u64 {
        let problem =
            make_problem(ProblemKind::Localization, nodes, 2, 0.01, seed).expect("builds");
        let x0 = problem
            .domain()
            .point_at(&[0.85, 0.85])
            .expect("start in domain");
        let mut at_1 = [0.0_f64; 2];
        let mut at_20 = [0.0_f64; 2];
        for (slot, mode) in [Mode::NonCooperative, Mode::Diffusion].into_iter().enumerate() {
            let config = SolverConfig::new(mode, 0.1, 20, 0.0).expect("config");
            let trace = run(&problem, &weights, &config, &x0).expect("run completes");
            at_1[slot] = trace.records[1].global_error;
            at_20[slot] = trace.records[20].global_error;
        }
        if at_20[1] <= at_20[0] {
            wins += 1;
        }
        if at_20[0] <= at_1[0] && at_20[1] <= at_1[1] {
            reductions += 1;
        }
    }
    verdict(
        "cooperation benefit",
        wins >= 16 && reductions == 20,
        &format!("diffusion at or below non-cooperative in {wins}/20 instances at iteration 20, error reduction in {reductions}/20"),
    );
}

// ---------------------------------------------------------------------------
// criterion 8: exact-rational formula oracles
// ---------------------------------------------------------------------------

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn f(r: &BigRational) -> f64 {
    r.to_f64().expect("ratio representable")
}

/// Relative agreement at 1e-12, with an absolute fallback at zero.
fn close(lib: f64, oracle: f64) -> bool {
    if oracle == 0.0 {
        lib.abs() <= 1e-12
    } else {
        ((lib - oracle) / oracle).abs() <= 1e-12
    }
}

/// A bounds profile whose analysis-relevant fields are exact rationals.
#[allow(clippy::too_many_arguments)]
fn rational_profile(
    node_gain: (BigRational, BigRational),
    stack_gain: (BigRational, BigRational),
    jacobian_l: BigRational,
    gradient_l: BigRational,
    normal_l: BigRational,
    hood_res_min: BigRational,
    node_res_max: BigRational,
) -> BoundsProfile {
    BoundsProfile {
        node_gain_min: f(&node_gain.0),
        node_gain_max: f(&node_gain.1),
        stack_gain_min: f(&stack_gain.0),
        stack_gain_max: f(&stack_gain.1),
        jacobian_lipschitz: f(&jacobian_l),
        gradient_lipschitz: f(&gradient_l),
        normal_matrix_lipschitz: f(&normal_l),
        neighborhood_residual_max: 2.0,
        neighborhood_residual_min: f(&hood_res_min),
        node_residual_max: f(&node_res_max),
        node_residual_min: 0.0,
        safety: 1.5,
    }
}

#[test]
fn criterion_8_formulas_match_exact_rational_oracles() {
    let two = rat(2, 1);
    let mut verified = [0usize; 5];

    // lemma1_constants: t1 = a J / (2 S_min) exactly rational;
    // t2 = (1 - a) S_max / S_min + sqrt(2) n a J E_min / S_min^2 splits
    // into rational coefficients around the single irrational factor.
    let alphas = [rat(1, 5), rat(1, 2), rat(3, 4), rat(1, 1), rat(7, 8)];
    let profiles1 = [
        (rat(1, 2), rat(3, 1), rat(2, 1), rat(1, 10), 2usize),
        (rat(1, 1), rat(2, 1), rat(1, 4), rat(1, 2), 3),
        (rat(3, 4), rat(7, 4), rat(5, 8), rat(1, 8), 5),
        (rat(2, 1), rat(5, 2), rat(3, 2), rat(3, 10), 4),
        (rat(5, 4), rat(4, 1), rat(1, 16), rat(3, 8), 7),
    ];
    for (s_min, s_max, jac, e_min, n) in &profiles1 {
        for alpha in &alphas {
            let bounds = rational_profile(
                (rat(1, 1), rat(2, 1)),
                (s_min.clone(), s_max.clone()),
                jac.clone(),
                rat(1, 1),
                rat(1, 1),
                e_min.clone(),
                rat(1, 1),
            );
            let (t1, t2) = lemma1_constants(&bounds, f(alpha), *n);
            let t1_oracle = alpha * jac / (&two * s_min);
            let linear = (rat(1, 1) - alpha) * s_max / s_min;
            let radical = rat(*n as i64, 1) * alpha * jac * e_min / (s_min * s_min);
            let t2_oracle = f(&linear) + f(&radical) * std::f64::consts::SQRT_2;
            assert!(close(t1, f(&t1_oracle)), "t1 {t1} vs oracle {}", f(&t1_oracle));
            assert!(close(t2, t2_oracle), "t2 {t2} vs oracle {t2_oracle}");
            verified[0] += 1;
        }
    }

    // lemma2_constants over topologies whose neighborhood statistics are
    // derived here by hand: (topology, k, l, n_kl, n_l, excl_k + excl_l).
    let custom = Topology::from_edges(5, &[(0, 1), (0, 2), (1, 2), (2, 3), (3, 4)])
        .expect("custom graph builds");
    let pair_cases = [
        (Topology::path(4).expect("path"), 1usize, 2usize, 2i64, 3i64, 2i64),
        (Topology::path(4).expect("path"), 0, 3, 0, 2, 4),
        (Topology::ring(5).expect("ring"), 0, 1, 2, 3, 2),
        (Topology::complete(4).expect("complete"), 2, 0, 4, 4, 0),
        (custom, 2, 3, 2, 3, 3),
    ];
    let shapes2 = [
        (rat(1, 2), (rat(1, 1), rat(2, 1)), rat(4, 1), rat(1, 1)),
        (rat(1, 4), (rat(1, 2), rat(3, 2)), rat(1, 2), rat(3, 4)),
        (rat(1, 1), (rat(2, 1), rat(3, 1)), rat(1, 8), rat(1, 2)),
        (rat(3, 5), (rat(3, 4), rat(5, 4)), rat(2, 1), rat(5, 8)),
        (rat(1, 8), (rat(1, 1), rat(7, 2)), rat(7, 8), rat(2, 1)),
    ];
    for (topology, k, l, n_kl, n_l, excl) in &pair_cases {
        let stats = neighborhood_stats(topology);
        for (alpha, gain, grad, res) in &shapes2 {
            let bounds = rational_profile(
                gain.clone(),
                (rat(1, 1), rat(2, 1)),
                rat(1, 1),
                grad.clone(),
                rat(1, 1),
                rat(1, 10),
                res.clone(),
            );
            let (a1, a2) = lemma2_constants(&bounds, &stats, f(alpha), *k, *l);
            let s2 = &gain.0 * &gain.0;
            let nkl = rat(*n_kl, 1);
            let nl = rat(*n_l, 1);
            let a1_oracle =
                rat(1, 1) + (alpha * &nkl + &two * alpha * &nkl * grad) / (&two * &nl * &s2);
            let a2_oracle =
                (&nl + rat(3, 1) * rat(*excl, 1)) * alpha * &gain.1 * res / (&two * &nl * &s2);
            assert!(close(a1, f(&a1_oracle)), "a1 {a1} vs oracle {}", f(&a1_oracle));
            assert!(close(a2, f(&a2_oracle)), "a2 {a2} vs oracle {}", f(&a2_oracle));
            verified[1] += 1;
        }
    }

    // pi_sequence: exact affine recursion, checked at the horizon.
    let growths = [rat(1, 1), rat(9, 8), rat(5, 4), rat(3, 2), rat(2, 1)];
    let offsets = [rat(1, 4), rat(1, 2), rat(5, 8), rat(3, 4), rat(7, 8)];
    for (i, a1) in growths.iter().enumerate() {
        for (j, a2) in offsets.iter().enumerate() {
            let horizon = 5 + 4 * i + j;
            let pi = pi_sequence(f(a1), f(a2), horizon);
            assert_eq!(pi.len(), horizon + 1);
            assert_eq!(pi[0], 0.0);
            let mut oracle = rat(0, 1);
            for _ in 0..horizon {
                oracle = a2 + a1 * &oracle;
            }
            let last = *pi.last().expect("nonempty");
            assert!(
                close(last, f(&oracle)),
                "pi^{horizon} {last} vs oracle {}",
                f(&oracle)
            );
            verified[2] += 1;
        }
    }

    // discrepancy_bound: zeta and xi are rational in the inputs. The node
    // counts and max neighborhood sizes are stated by hand per topology.
    let custom = Topology::from_edges(5, &[(0, 1), (0, 2), (1, 2), (2, 3), (3, 4)])
        .expect("custom graph builds");
    let stats_cases = [
        (Topology::path(2).expect("path"), 2i64, 2i64),
        (Topology::path(4).expect("path"), 4, 3),
        (Topology::ring(5).expect("ring"), 5, 3),
        (Topology::complete(4).expect("complete"), 4, 4),
        (custom, 5, 4),
    ];
    let shapes4 = [
        (rat(1, 8), rat(1, 2), rat(1, 4), (rat(1, 1), rat(2, 1)), rat(1, 1)),
        (rat(1, 16), rat(1, 4), rat(1, 2), (rat(1, 1), rat(3, 2)), rat(3, 4)),
        (rat(1, 32), rat(2, 1), rat(3, 4), (rat(3, 2), rat(2, 1)), rat(1, 2)),
        (rat(1, 10), rat(1, 1), rat(1, 8), (rat(1, 1), rat(5, 2)), rat(5, 8)),
        (rat(1, 20), rat(3, 4), rat(1, 1), (rat(5, 4), rat(7, 4)), rat(7, 8)),
    ];
    for (topology, n, n_max) in &stats_cases {
        let stats = neighborhood_stats(topology);
        for (normal_l, grad, pi_value, gain, res) in &shapes4 {
            let bounds = rational_profile(
                gain.clone(),
                (rat(1, 1), rat(2, 1)),
                rat(1, 1),
                grad.clone(),
                normal_l.clone(),
                rat(1, 10),
                res.clone(),
            );
            let s2 = &gain.0 * &gain.0;
            let nn = rat(*n, 1);
            let zeta_oracle = &nn * rat(*n_max, 1) * normal_l * pi_value / &s2;
            assert!(
                zeta_oracle < rat(1, 1),
                "oracle setup must keep the expansion margin below 1"
            );
            let gap = &nn * &nn * grad * pi_value;
            let xi_oracle = &gap / &s2
                + (&nn * &gain.1 * res + &gap) * &zeta_oracle
                    / (&s2 * (rat(1, 1) - &zeta_oracle));
            let (zeta, xi) =
                discrepancy_bound(&bounds, &stats, f(pi_value)).expect("margin below 1");
            assert!(
                close(zeta, f(&zeta_oracle)),
                "zeta {zeta} vs oracle {}",
                f(&zeta_oracle)
            );
            assert!(close(xi, f(&xi_oracle)), "xi {xi} vs oracle {}", f(&xi_oracle));
            verified[3] += 1;
        }
    }

    // equilibria: constructed from chosen rational fixed points, so both
    // roots and the discriminant of y = t1 g^2 y^2 + t2 g y + a xi have
    // exact expected values.
    let roots = [
        (rat(1, 8), rat(2, 1)),
        (rat(1, 5), rat(5, 2)),
        (rat(1, 2), rat(3, 1)),
        (rat(3, 8), rat(5, 2)),
        (rat(1, 4), rat(7, 4)),
    ];
    let shapes8 = [
        (rat(1, 4), rat(1, 2), rat(1, 5)),
        (rat(1, 2), rat(3, 4), rat(1, 2)),
        (rat(1, 1), rat(1, 2), rat(1, 1)),
        (rat(1, 8), rat(1, 1), rat(2, 5)),
        (rat(3, 4), rat(1, 2), rat(4, 5)),
    ];
    for (y_min, y_max) in &roots {
        for (t1, g, alpha) in &shapes8 {
            let t1g2 = t1 * g * g;
            let xi = y_min * y_max * &t1g2 / alpha;
            let t2 = (rat(1, 1) - (y_min + y_max) * &t1g2) / g;
            assert!(t2 >= rat(0, 1), "oracle setup must keep t2 nonnegative");
            let disc = (&t1g2 * (y_max - y_min)).pow(2);

            let pair = equilibria(f(t1), f(&t2), f(g), f(alpha), f(&xi))
                .expect("constructed instance has real equilibria");
            assert!(
                close(pair.y_min, f(y_min)),
                "y_min {} vs oracle {}",
                pair.y_min,
                f(y_min)
            );
            assert!(
                close(pair.y_max, f(y_max)),
                "y_max {} vs oracle {}",
                pair.y_max,
                f(y_max)
            );
            assert!(
                close(pair.discriminant, f(&disc)),
                "discriminant {} vs oracle {}",
                pair.discriminant,
                f(&disc)
            );
            verified[4] += 1;
        }
    }

    let pass = verified.iter().all(|&v| v == 25);
    verdict(
        "formula oracles",
        pass,
        &format!(
            "rational oracle tuples verified: lemma1 {}, lemma2 {}, pi {}, discrepancy {}, equilibria {}",
            verified[0], verified[1], verified[2], verified[3], verified[4]
        ),
    );
}
