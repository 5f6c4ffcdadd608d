use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not stable: spectral radius {radius} is not below 1")]
    NonStationary { radius: f64 },
    #[error("iteration did not converge (relative residual {residual:e})")]
    NoConvergence { residual: f64 },
    #[error("matrix is not positive definite (pivot {pivot} failed)")]
    NotPositiveDefinite { pivot: usize },
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("sample too short: need at least {needed} observations, have {available}")]
    SampleTooShort { needed: usize, available: usize },
    #[error("projected shock regressor is degenerate at horizon {horizon}")]
    DegenerateRegressor { horizon: usize },
    #[error("control design matrix is rank deficient")]
    SingularDesign,
    #[error("linear system is numerically singular")]
    SingularSystem,
    #[error("smoothing penalty needs at least 3 horizons, got {0}")]
    TooFewHorizons(usize),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("block length {block} invalid for {rows} residual rows")]
    InvalidBlockLength { block: usize, rows: usize },
    #[error("bootstrap recursion exploded at t = {t}")]
    ExplosiveFit { t: usize },
    #[error("replication {index} failed after {attempts} attempts: {reason}")]
    ReplicationFailure {
        index: usize,
        attempts: usize,
        reason: String,
    },
    #[error("variance estimate below 1e-14 for replication {replication} at horizon {horizon}")]
    ZeroVariance { replication: usize, horizon: usize },
    #[error("need at least {needed} valid t statistics, have {valid}")]
    TooFewReplications { valid: usize, needed: usize },
    #[error("{failed} of {total} Monte Carlo replications failed")]
    TooManyFailures { failed: usize, total: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
