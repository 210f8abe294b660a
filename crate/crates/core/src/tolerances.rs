//! Numerical thresholds shared across modules. Every value here is written
//! into the run manifest.

use serde::Serialize;

/// Eigenpair residual bound, relative to `1 + lambda`.
pub const EPS_EIG: f64 = 1e-8;
/// Mass-orthonormality defect.
pub const EPS_ORTH: f64 = 1e-8;
/// Relative gap below which eigenvalues are merged into one cluster.
pub const EPS_CLUSTER: f64 = 1e-6;
/// Discrete adjoint identity residual.
pub const EPS_ADJ: f64 = 1e-6;
/// Vertex-trace obstruction threshold.
pub const EPS_TRACE: f64 = 1e-6;
/// Odd/odd length-ratio match.
pub const EPS_RAT: f64 = 1e-12;
/// Spectral gap below which the kernel of the generator is taken as nontrivial.
pub const EPS_GAP: f64 = 1e-8;
/// A mode is trusted while `lambda * h_max^2` stays below this.
pub const TRUST_LAMBDA_H2: f64 = 0.1;
/// Relative eigenvalue floor for the moment-problem Gram truncation.
pub const GRAM_TRUNCATION: f64 = 1e-12;
/// Default reachable-residual tolerance for null controls.
pub const CONTROL_RESIDUAL: f64 = 1e-8;
/// Covariance symmetry tolerance.
pub const Q_SYMMETRY: f64 = 1e-12;
/// Eigenvalues of Q above `-Q_NEGATIVE` are clamped to zero.
pub const Q_NEGATIVE: f64 = 1e-12;
/// Entrywise check of `sqrt(Q)^2 = Q`.
pub const Q_SQRT: f64 = 1e-10;
/// Cholesky jitter escalation for step covariances.
pub const JITTER_START: f64 = 1e-14;
pub const JITTER_MAX: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct Tolerances {
    pub eps_eig: f64,
    pub eps_orth: f64,
    pub eps_cluster: f64,
    pub eps_adj: f64,
    pub eps_trace: f64,
    pub eps_rat: f64,
    pub eps_gap: f64,
    pub trust_lambda_h2: f64,
    pub gram_truncation: f64,
    pub control_residual: f64,
    pub q_symmetry: f64,
    pub q_negative: f64,
    pub q_sqrt: f64,
    pub jitter_start: f64,
    pub jitter_max: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eps_eig: EPS_EIG,
            eps_orth: EPS_ORTH,
            eps_cluster: EPS_CLUSTER,
            eps_adj: EPS_ADJ,
            eps_trace: EPS_TRACE,
            eps_rat: EPS_RAT,
            eps_gap: EPS_GAP,
            trust_lambda_h2: TRUST_LAMBDA_H2,
            gram_truncation: GRAM_TRUNCATION,
            control_residual: CONTROL_RESIDUAL,
            q_symmetry: Q_SYMMETRY,
            q_negative: Q_NEGATIVE,
            q_sqrt: Q_SQRT,
            jitter_start: JITTER_START,
            jitter_max: JITTER_MAX,
        }
    }
}
