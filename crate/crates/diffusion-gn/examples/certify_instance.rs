//! Builds a convergence certificate for a localization instance and walks
//! through every condition it checks.
//!
//! The certificate machinery estimates curvature and residual bounds by
//! sampling the domain, assembles the contraction and expansion constants
//! of the diffusion error recursion, locates the equilibria of the bounding
//! map, and then evaluates each sufficient condition with a numeric margin.
//! A certificate is a conjunction: `overall` holds only when every flag
//! passes.

use diffusion_gn::analysis::certify;
use diffusion_gn::network::{combination_matrix, WeightRule};
use diffusion_gn::problem::{estimate_bounds_with_safety, make_problem};
use diffusion_gn::{Mode, ProblemKind, SolverConfig, Topology};

fn main() {
    // The instance is chosen so that every condition holds: a complete
    // graph keeps neighborhoods identical, mild noise keeps residuals
    // small, and the step size sits inside the stable window.
    let nodes = 6;
    let problem = make_problem(ProblemKind::Localization, nodes, 2, 0.01, 31)
        .expect("localization instance builds");
    let topology = Topology::complete(nodes).expect("complete graph builds");
    let weights = combination_matrix(&topology, WeightRule::Uniform);
    let config = SolverConfig::new(Mode::Diffusion, 0.02, 1200, 1e-8).expect("valid config");
    let x0 = problem
        .domain()
        .point_at(&[0.9, 0.9])
        .expect("start inside the domain");

    let bounds = estimate_bounds_with_safety(&problem, 200, 11, 1.005)
        .expect("bound estimation succeeds");
    let horizon = 50;
    let certificate = certify(&problem, &weights, &config, &x0, horizon, &bounds)
        .expect("certification runs");

    println!("instance: {} on a complete graph of {nodes} nodes", problem.label());
    println!("step size alpha = {}, horizon = {horizon}\n", config.alpha);

    let c = &certificate.constants;
    println!("recursion constants:");
    println!("  t1 (quadratic)     = {:.6e}", c.t1);
    println!("  t2 (linear)        = {:.6e}", c.t2);
    println!("  theta (overlap)    = {:.6e}", c.theta);
    println!("  Pi^{}             = {:.6e}", c.horizon, c.pi.last().expect("pi nonempty"));
    match c.xi {
        Some(xi) => println!("  xi (offset)        = {:.6e}", xi),
        None => println!("  xi (offset)        = unbounded (expansion condition violated)"),
    }

    if let Some(pair) = certificate.equilibria {
        println!("\nequilibria of the bounding map:");
        println!("  y_min (attractor)  = {:.6e}", pair.y_min);
        println!("  y_max (basin edge) = {:.6e}", pair.y_max);
        println!("  discriminant       = {:.6e}", pair.discriminant);
    }

    println!("\nconditions:");
    for (name, flag) in certificate.flags() {
        let verdict = if flag.pass { "pass" } else { "FAIL" };
        match flag.margin {
            Some(margin) => println!("  {name:<22} {verdict}  (margin {margin:.3e})"),
            None => println!("  {name:<22} {verdict}  (no finite margin)"),
        }
    }
    println!(
        "\noverall: {}",
        if certificate.overall { "CERTIFIED" } else { "NOT CERTIFIED" }
    );

    let d = &certificate.diagnostics;
    println!("\ndiagnostics (informational, not gated):");
    println!("  spectral norm of the extended weights = {:.6}", d.g_spectral);
    println!("  Frobenius norm of the same            = {:.6}", d.g_frobenius);
    println!("  initial stacked error                 = {:.6}", d.initial_stack_error);
}
