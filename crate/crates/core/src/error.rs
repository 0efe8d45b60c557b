use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A scenario failed validation; `field` names the offending key.
    #[error("invalid scenario field `{field}`: {message}")]
    InvalidScenario { field: String, message: String },

    /// An enumeration or search would exceed its configured size cap.
    #[error("capacity exceeded: {what} needs {required} entries, cap is {cap}")]
    Capacity {
        what: &'static str,
        required: u128,
        cap: u128,
    },

    /// A pair holds data but cannot obtain a positive rate even without interference.
    #[error("pair {pair} has queued data but zero interference-free rate; its queue can never drain")]
    InfeasiblePair { pair: usize },

    /// The target rate tuple lies outside the T-slot region.
    #[error(
        "rate tuple is not achievable within {horizon} slots (delta = {delta:.6}); \
         scale it down by at least 1/delta = {scale_down:.6}"
    )]
    Unachievable {
        horizon: usize,
        delta: f64,
        scale_down: f64,
    },

    /// Scaling to the boundary is undefined when the margin is zero.
    #[error("boundary undefined: rate margin is zero, the direction is unreachable")]
    BoundaryUndefined,

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidScenario {
            field: field.into(),
            message: message.into(),
        }
    }
}
