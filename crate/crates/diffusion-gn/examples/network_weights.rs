//! Tours the topology and combination-weight machinery: builds several
//! graphs, derives weights under both rules, and checks the spectral facts
//! the solver relies on.
//!
//! Combination matrices here are row stochastic with nonnegative entries
//! supported on the neighborhood pattern (self-loops included), so their
//! spectral radius is exactly 1 and extending them blockwise to `M`
//! parameter components changes nothing. Metropolis weights are also
//! column stochastic on any graph; uniform weights are only so on regular
//! ones.

use diffusion_gn::network::{
    combination_matrix, neighborhood_stats, spectral_radius, WeightRule,
};
use diffusion_gn::Topology;

fn main() {
    let n = 8;
    let topologies = [
        ("complete", Topology::complete(n)),
        ("ring", Topology::ring(n)),
        ("path", Topology::path(n)),
        ("random_geometric", Topology::random_geometric(n, 0.55, 13)),
    ];

    println!(
        "{:>18} {:>6} {:>11} {:>12} {:>10} {:>12} {:>12}",
        "topology", "edges", "connected", "min overlap", "rule", "rho(C)", "rho(C x I3)"
    );
    for (name, topology) in topologies {
        let topology = topology.expect("topology builds");
        let stats = neighborhood_stats(&topology);
        let edges: usize = (0..topology.node_count())
            .map(|k| topology.degree(k))
            .sum::<usize>()
            / 2;
        let overlap = stats
            .min_shared()
            .expect("multi-node network has node pairs");

        for rule in [WeightRule::Uniform, WeightRule::Metropolis] {
            let weights = combination_matrix(&topology, rule);
            let rho = spectral_radius(weights.matrix()).expect("power iteration converges");
            let rho_extended =
                spectral_radius(&weights.extended(3)).expect("power iteration converges");
            println!(
                "{:>18} {:>6} {:>11} {:>12} {:>10} {:>12.9} {:>12.9}",
                name,
                edges,
                topology.is_connected(),
                overlap,
                rule.to_string(),
                rho,
                rho_extended
            );
        }
    }

    // Row sums are exactly 1 by construction; show the worst deviation
    // actually representable after floating-point accumulation.
    let topology = Topology::random_geometric(n, 0.55, 13).expect("topology builds");
    let weights = combination_matrix(&topology, WeightRule::Metropolis);
    let worst = (0..n)
        .map(|k| (weights.matrix().row(k).sum() - 1.0).abs())
        .fold(0.0_f64, f64::max)
        ;
    println!("\nworst row-sum deviation from 1 (metropolis, geometric graph): {worst:.2e}");

    // A spectral radius of 1 does not promise that consensus modes decay.
    // On a 2-regular ring the metropolis rule spends each row entirely on
    // the two neighbors (max degree slack is zero), so nodes carry no
    // self-weight, and on an even ring the alternating vector is flipped
    // in sign rather than damped: an eigenvalue of exactly -1. Uniform
    // weights keep a 1/3 self-anchor and damp the same mode to -1/3.
    let ring = Topology::ring(n).expect("ring builds");
    let alternating = nalgebra::DVector::from_fn(n, |k, _| if k % 2 == 0 { 1.0 } else { -1.0 });
    for rule in [WeightRule::Metropolis, WeightRule::Uniform] {
        let weights = combination_matrix(&ring, rule);
        let self_weight = weights.weight(0, 0);
        let image = weights.matrix() * &alternating;
        let gain = image.norm() / alternating.norm();
        println!(
            "ring under {rule}: self-weight {self_weight:.3}, alternating-mode gain {gain:.3}"
        );
    }

    let stats = neighborhood_stats(&topology);
    println!("\nneighborhood sizes on the geometric graph (self included):");
    for k in 0..n {
        let members: Vec<String> = topology.neighbors(k).iter().map(|l| l.to_string()).collect();
        println!("  node {k}: |N_{k}| = {} -> {{{}}}", stats.size(k), members.join(", "));
    }
}
