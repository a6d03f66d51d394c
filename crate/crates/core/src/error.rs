use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("domain error in `{op}` at tape node {node}")]
    Domain { node: usize, op: &'static str },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("step {step}: {source}")]
    AtStep { step: usize, source: Box<Error> },

    #[error("sample {index}: {source}")]
    AtSample { index: usize, source: Box<Error> },

    #[error("fixed-point iteration did not converge in {iterations} iterations (last residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("all measurements are below the noise floor {floor:e}; enlarge the step sizes")]
    BelowNoiseFloor { floor: f64 },

    #[error("loss became non-finite at epoch {epoch} (last finite loss {last_finite:e})")]
    NonFiniteLoss { epoch: usize, last_finite: f64 },

    #[error("unknown system `{0}` (expected one of bead_on_wire, modified_pendulum, galactic, pendulum, harmonic)")]
    UnknownSystem(String),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// True for overflow, NaN and domain failures, possibly wrapped in step or sample context.
    pub fn is_non_finite(&self) -> bool {
        match self {
            Error::NonFinite(_) | Error::Domain { .. } | Error::NonFiniteLoss { .. } => true,
            Error::AtStep { source, .. } | Error::AtSample { source, .. } => source.is_non_finite(),
            _ => false,
        }
    }

    pub(crate) fn at_step(step: usize, err: Error) -> Self {
        Error::AtStep { step, source: Box::new(err) }
    }

    pub(crate) fn at_sample(index: usize, err: Error) -> Self {
        Error::AtSample { index, source: Box::new(err) }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Format(err.to_string())
    }
}
