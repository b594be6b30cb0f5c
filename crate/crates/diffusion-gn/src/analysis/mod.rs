//! Convergence theory: constants, equilibria, certification, and trace
//! audits.
//!
//! The cooperative error recursion is governed by the scalar map
//!
//! ```text
//!     phi(y) = t1 |G|^2 y^2 + t2 |G| y + alpha xi
//! ```
//!
//! whose coefficients are assembled from sampled problem bounds and
//! neighborhood statistics. This module computes every constant in that
//! chain (`t1`, `t2`, the pairwise recursion coefficients `a1`, `a2`, the
//! gap sequence `Pi`, the expansion margin `zeta`, and the descent
//! discrepancy bound `xi`), finds the equilibria of `phi`, evaluates the
//! sufficient conditions as a [`ConvergenceCertificate`] with numeric
//! margins, and replays recorded traces against the inequalities the
//! theory asserts ([`audit_trace`]).

mod audit;
mod certificate;
mod constants;
mod equilibria;

pub use audit::{audit_trace, AuditCheck, AuditReport, AuditRow};
pub use certificate::{certify, CertificateDiagnostics, ConditionFlag, ConvergenceCertificate};
pub use constants::{
    discrepancy_bound, lemma1_constants, lemma2_constants, network_constants, pi_sequence,
    LemmaConstants, PairConstants,
};
pub use equilibria::{equilibria, stability_windows, EquilibriumPair, StabilityWindows};

use crate::network::NetworkError;
use crate::problem::ProblemError;
use crate::solvers::SolverError;
use thiserror::Error;

/// Errors raised by the analysis layer.
#[derive(Debug, Error)]
pub enum AnalysisError {
    /// The expansion condition `zeta < 1` behind the discrepancy bound
    /// failed, so `xi` is undefined.
    #[error("expansion condition violated: zeta = {zeta:.6} >= 1")]
    ExpansionConditionViolated { zeta: f64 },
    /// The equilibrium discriminant is negative: the scalar recursion has
    /// no real fixed points.
    #[error("no real equilibrium: discriminant = {discriminant:.6e} < 0")]
    NoRealEquilibrium { discriminant: f64 },
    /// The trace lacks data a computation needs (wrong mode, missing
    /// recorded descents or aggregates).
    #[error("trace incomplete: {0}")]
    TraceIncomplete(String),
    #[error("invalid analysis input: {0}")]
    BadInput(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}
