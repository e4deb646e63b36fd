use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke an operation's precondition (shape, symmetry, range).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("degenerate kernel: {0}")]
    DegenerateKernel(String),

    #[error("infeasible request: {0}")]
    Infeasible(String),

    #[error("kernel sampler did not converge: {0}")]
    Sampler(String),

    #[error("task sampling failed: {0}")]
    TaskSampling(String),

    #[error("training diverged at step {step} (loss = {loss})")]
    Diverged { step: usize, loss: f64 },

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("unknown metric `{name}`; available: {available}")]
    UnknownMetric { name: String, available: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
