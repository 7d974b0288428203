use thiserror::Error;

pub type Result<T> = std::result::Result<T, SfdeError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SfdeError {
    /// An argument lies outside the domain an operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    /// σσᵀ failed the positive-definiteness check at the given arguments.
    #[error("model violation: σσᵀ is not positive definite at x={x:?}, h={h:?}, beta={beta:?} (pivot {pivot:e})")]
    ModelViolation {
        x: Vec<f64>,
        h: Vec<f64>,
        beta: Vec<f64>,
        pivot: f64,
    },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("simulation diverged at t={time}")]
    SimulationDiverged { time: f64 },

    #[error("optimization failed: {0}")]
    OptimizationFailed(String),

    /// The Fisher information I(θ₀) is not positive definite.
    #[error("Fisher information block `{block}` is not positive definite")]
    FisherNotPositiveDefinite { block: &'static str },

    #[error("experiment degenerate at n={n}, epsilon={epsilon}: {failures} of {replications} replications failed (seeds {seeds:?})")]
    ExperimentDegenerate {
        n: usize,
        epsilon: f64,
        failures: usize,
        replications: usize,
        seeds: Vec<u64>,
    },

    /// Malformed path or summary file.
    #[error("format error at line {line}: {message}")]
    Format { line: u64, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for SfdeError {
    fn from(err: std::io::Error) -> Self {
        SfdeError::Io(err.to_string())
    }
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(SfdeError::Domain(msg.into()))
}
