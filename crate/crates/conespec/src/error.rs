use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point {point:?} lies outside the domain")]
    OutsideDomain { point: [f64; 2] },

    #[error("mixture density vanishes at {point:?}; likelihoods are undefined there")]
    SingularPoint { point: [f64; 2] },

    #[error("invalid mixture model: {0}")]
    InvalidModel(String),

    #[error("invalid quadrature spec: {0}")]
    InvalidQuadrature(String),

    #[error("invalid kernel profile: {0}")]
    InvalidKernel(String),

    #[error("rejection sampler acceptance rate fell below {rate:.2e}")]
    SamplerInefficiency { rate: f64 },

    #[error("active set for the mixture operator is disconnected ({components} components)")]
    DisconnectedActiveSet { components: usize },

    #[error("graph is disconnected ({components} components)")]
    DisconnectedGraph { components: usize },

    #[error("vertex {index} is isolated at epsilon {epsilon}")]
    IsolatedVertex { index: usize, epsilon: f64 },

    #[error("eigensolver did not converge within {iterations} iterations; unconverged indices {unconverged:?}, worst residual {worst_residual:.3e}")]
    EigenNonConvergence {
        iterations: usize,
        unconverged: Vec<usize>,
        worst_residual: f64,
    },

    #[error("invalid eigensolver request: {0}")]
    InvalidEigenRequest(String),

    #[error("dimension {dim} too large for dense validation (limit {limit})")]
    DenseValidationTooLarge { dim: usize, limit: usize },

    #[error("matrix is not symmetric positive semidefinite: {0}")]
    NotPsd(String),

    #[error("embedding dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("basis vectors are rank deficient")]
    RankDeficientBasis,

    #[error("invalid cone parameters: {0}")]
    InvalidConeParameters(String),

    #[error("degenerate sweep: all mass on one side for every cut")]
    DegenerateSweep,

    #[error(
        "transport problem too large for the exact solver and no entropic fallback requested: {0}"
    )]
    TransportTooLarge(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
