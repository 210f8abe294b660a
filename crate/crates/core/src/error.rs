use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {}", .0.join("; "))]
    InvalidGraph(Vec<String>),
    #[error("graph is not a tree")]
    NotATree,
    #[error("path endpoints coincide: {0}")]
    SameVertex(String),
    #[error("unknown vertex: {0}")]
    UnknownVertex(String),
    #[error("omitted vertex {0} is not a boundary vertex")]
    OmitNotBoundary(String),
    #[error("no path union exists: {0}")]
    Infeasible(String),
    #[error("invalid path union: {}", .0.join("; "))]
    InvalidPathUnion(Vec<String>),
    #[error("eigensolver did not converge after {iterations} iterations (worst residual {residual:e})")]
    ConvergenceFailure { iterations: usize, residual: f64 },
    #[error("edge lengths {0} and {1} are not in an odd/odd ratio")]
    RationalConditionFailed(f64, f64),
    #[error("linear solve failed: {0}")]
    SolveFailure(String),
    #[error("no trusted eigenvalue clusters; refine the mesh or request fewer modes")]
    SpectrumTooCoarse,
    #[error("moment problem ill-conditioned: reachable residual {residual:e} exceeds {tolerance:e}")]
    IllConditioned { residual: f64, tolerance: f64 },
    #[error("step covariance is not positive semidefinite even with jitter {jitter:e}")]
    CovarianceNotPsd { jitter: f64 },
    #[error("spectral gap {lambda0:e} too small to decide with a nonzero potential")]
    SpectralGapAmbiguous { lambda0: f64 },
    #[error("covariance matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("covariance matrix is not symmetric")]
    AsymmetricMatrix,
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Variant name, as printed in CLI error messages.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidGraph(_) => "InvalidGraph",
            Error::NotATree => "NotATree",
            Error::SameVertex(_) => "SameVertex",
            Error::UnknownVertex(_) => "UnknownVertex",
            Error::OmitNotBoundary(_) => "OmitNotBoundary",
            Error::Infeasible(_) => "Infeasible",
            Error::InvalidPathUnion(_) => "InvalidPathUnion",
            Error::ConvergenceFailure { .. } => "ConvergenceFailure",
            Error::RationalConditionFailed(..) => "RationalConditionFailed",
            Error::SolveFailure(_) => "SolveFailure",
            Error::SpectrumTooCoarse => "SpectrumTooCoarse",
            Error::IllConditioned { .. } => "IllConditioned",
            Error::CovarianceNotPsd { .. } => "CovarianceNotPsd",
            Error::SpectralGapAmbiguous { .. } => "SpectralGapAmbiguous",
            Error::NotPsd(_) => "NotPsd",
            Error::AsymmetricMatrix => "AsymmetricMatrix",
            Error::Invalid(_) => "Invalid",
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
            Error::Csv(_) => "Csv",
        }
    }

    /// Numerical failures exit with 3, bad input with 2.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ConvergenceFailure { .. }
            | Error::SolveFailure(_)
            | Error::SpectrumTooCoarse
            | Error::IllConditioned { .. }
            | Error::CovarianceNotPsd { .. }
            | Error::SpectralGapAmbiguous { .. } => 3,
            _ => 2,
        }
    }
}
