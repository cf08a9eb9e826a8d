use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Tensor shapes do not line up for the requested operation.
    #[error("dimension error in {op}: {detail}")]
    Dimension { op: &'static str, detail: String },

    /// A caller broke an API contract (non-scalar loss, foreign variable, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A loss, gradient or parameter became NaN or infinite.
    #[error("training diverged{}: {what} ({detail})", iteration.map(|i| format!(" at iteration {i}")).unwrap_or_default())]
    Divergence {
        iteration: Option<u64>,
        what: String,
        detail: String,
    },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Malformed binary input; `offset` is the byte position where parsing stopped.
    #[error("format error at byte offset {offset}: {detail}")]
    Format { offset: u64, detail: String },

    #[error("mode error: {0}")]
    Mode(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn dim(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Dimension {
            op,
            detail: detail.into(),
        }
    }

    /// Attach an iteration number to a divergence error raised deeper in the stack.
    pub fn at_iteration(self, iteration: u64) -> Self {
        match self {
            Error::Divergence { what, detail, .. } => Error::Divergence {
                iteration: Some(iteration),
                what,
                detail,
            },
            other => other,
        }
    }
}
