use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("input domain is empty")]
    EmptyDomain,

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("`{name}` = {value} outside [{lo}, {hi}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("no sample available in magnitude interval {interval} of {total}")]
    Coverage { interval: usize, total: usize },

    #[error(
        "pruning failed at layer {layer}, weight ({row}, {col}), {side} side, interval {interval}"
    )]
    PruneFailure {
        layer: usize,
        row: usize,
        col: usize,
        side: &'static str,
        interval: usize,
    },

    #[error("sample pool exhausted at layer {layer}: needed {needed}, only {available} left")]
    PoolExhausted {
        layer: usize,
        needed: usize,
        available: usize,
    },

    #[error("unsupported architecture: {0}")]
    UnsupportedArchitecture(String),

    #[error("malformed network description: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    fn parameter(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }

    /// Construction failures that occur with probability at most delta are
    /// recoverable events, not bugs; callers counting failure rates match on this.
    pub fn is_prune_failure(&self) -> bool {
        matches!(
            self,
            Error::PruneFailure { .. } | Error::PoolExhausted { .. } | Error::Coverage { .. }
        )
    }
}

/// Shorthand for a [`Error::Parameter`] result.
pub fn param_err<T>(name: &'static str, reason: impl Into<String>) -> Result<T> {
    Err(Error::parameter(name, reason))
}

pub type Result<T> = std::result::Result<T, Error>;
