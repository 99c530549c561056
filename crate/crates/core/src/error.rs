use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum FricdynError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("matrix entries must be finite")]
    NonFiniteInput,

    #[error("mass matrix is singular or not positive definite")]
    SingularMass,

    #[error("LCP pivoting hit a secondary ray (no complementary solution on the pivot path)")]
    RayTermination,

    #[error("LCP pivot budget of {0} exhausted (degenerate cycling?)")]
    MaxPivots(usize),

    #[error("solver did not converge: residual {residual:.3e} above tolerance {tol:.3e}")]
    NotConverged { residual: f64, tol: f64 },

    #[error("non-finite loss encountered during line search (diverging optimization)")]
    NonFiniteLoss,

    #[error("time step failed at step {index} (t = {time}): {source}")]
    StepFailed {
        index: usize,
        time: f64,
        #[source]
        source: Box<FricdynError>,
    },

    #[error("event bracketing failed near t = {0}: step too large to isolate the event")]
    EventBracketing(f64),

    #[error("empty series")]
    EmptySeries,

    #[error("reference value is zero; relative error undefined")]
    ZeroReference,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, FricdynError>;
