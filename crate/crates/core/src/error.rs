use thiserror::Error;

/// Rejected numeric input.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("{name} = {value} is not finite")]
    NotFinite { name: &'static str, value: f64 },
    #[error("{name} = {value} is outside {expected}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("invalid search interval [{lower}, {upper}]")]
    InvalidInterval { lower: f64, upper: f64 },
    #[error("{0}")]
    Invalid(String),
}

/// A strategy broke the message order or the physical rules of a session.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("signal already measured; a coherent pulse can be measured only once")]
    SignalConsumed,
    #[error("signal amplitude {amplitude} exceeds the agreed intensity {alpha_sq}")]
    IntensityExceeded { amplitude: f64, alpha_sq: f64 },
    #[error("invalid parameters: {0}")]
    Params(#[from] ParamError),
}

/// Structural problem in a classical protocol description.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TreeError {
    #[error("node at {path} has no children")]
    EmptyNode { path: String },
    #[error("honest distribution at {path} sums to {sum}, expected 1")]
    NotNormalized { path: String, sum: f64 },
    #[error("probability {value} at {path} is outside [0, 1]")]
    BadProbability { path: String, value: f64 },
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("invalid protocol spec: {0}")]
    Spec(String),
}
