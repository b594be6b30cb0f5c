//! Distributed nonlinear least squares over simulated node networks.
//!
//! A network of `N` nodes shares an unknown parameter vector `x` of dimension
//! `M`. Each node `k` owns one scalar residual `f_k(x)` with Jacobian row
//! `F_k(x)`, and the network estimates the minimizer of the aggregate cost
//!
//! ```text
//!     J(x) = sum_k f_k(x)^2
//! ```
//!
//! Three estimation strategies are implemented and can be compared on the
//! same problem instance:
//!
//! * **centralized**: a fusion center runs the damped Gauss-Newton update
//!   `x+ = x - alpha * [sum F_k' F_k]^-1 sum F_k' f_k`,
//! * **non-cooperative**: every node runs Gauss-Newton on the data of its
//!   1-hop neighborhood, evaluating all neighbor residuals at its own
//!   estimate,
//! * **diffusion**: every node first combines neighbor estimates through a
//!   row-stochastic weight matrix (combine phase), then descends along the
//!   neighborhood Gauss-Newton direction (adapt phase).
//!
//! The [`analysis`] module turns the known sufficient conditions for
//! convergence of the diffusion strategy into an executable certificate:
//! problem curvature and residual bounds are estimated by sampling, the
//! contraction/expansion constants of the error recursion are assembled, and
//! every condition is reported with a numeric margin. A recorded run can then
//! be audited against the inequalities the certificate promises.
//!
//! The crate is organized around runnable examples (`cargo run --example
//! <name>`):
//!
//! * `compare_modes`: all three strategies on one ring-network localization
//!   instance, error trajectories at checkpoints.
//! * `certify_instance`: full certification of a complete-graph instance,
//!   every condition with its margin, plus the derived constants.
//! * `audit_run`: runs the certified instance and audits the recorded trace
//!   against the promised inequalities, reporting the tightest slack.
//! * `network_weights`: combination matrices across topologies and weight
//!   rules, spectral radii, and the even-ring Metropolis pathology.
//! * `estimate_constants`: how the sampled curvature/residual bounds and the
//!   derived constants react to the safety factor.
//! * `cooperation_benefit`: diffusion versus non-cooperative accuracy over
//!   twenty seeded instances.
//!
//! A thin `diffusion-gn` binary exposes the same workflows as subcommands
//! (`run`, `certify`, `compare`, `audit`, `gen-config`) driven by a flat
//! key-value config file; see the README for the file formats.

pub mod analysis;
pub mod harness;
pub mod network;
pub mod problem;
pub mod solvers;

pub use analysis::{AuditReport, ConvergenceCertificate, EquilibriumPair, LemmaConstants};
pub use network::{CombinationMatrix, NeighborhoodStats, Topology};
pub use problem::{BoundsProfile, BoxDomain, NlsProblem, ProblemKind};
pub use solvers::{Mode, RunTrace, SolverConfig, StopReason};
