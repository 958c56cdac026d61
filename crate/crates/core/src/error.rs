use thiserror::Error;

/// Errors produced by chain construction, solvers and the experiment drivers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid transition matrix at row {row}: {reason}")]
    InvalidMatrix { row: usize, reason: String },

    #[error("invalid probability vector: {0}")]
    InvalidDistribution(String),

    #[error("chain is not ergodic: {0}")]
    NonErgodic(String),

    #[error("stationarity violated at vertex {vertex}: |(pi P - pi)_x| = {deviation:e}")]
    NotStationary { vertex: usize, deviation: f64 },

    #[error("detailed balance violated on edge ({x}, {y}): |pi_x P_xy - pi_y P_yx| = {deviation:e}")]
    NotReversible { x: usize, y: usize, deviation: f64 },

    #[error("invalid marked set: {0}")]
    InvalidMarkedSet(String),

    #[error("graph spec violation: {0}")]
    SpecViolation(String),

    #[error("derived chain is not ergodic: {0}")]
    ResultNotErgodic(String),

    #[error("{name} = {value} is out of range ({expected})")]
    OutOfRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("{what} needs n <= {limit}, got n = {n}")]
    TooLarge {
        what: &'static str,
        n: usize,
        limit: usize,
    },

    #[error("iterative solver stalled after {iterations} iterations (residual {residual:e})")]
    SolverDivergence { iterations: usize, residual: f64 },

    #[error("second eigenvalue {second} is within 1e-12 of 1")]
    DegenerateTopEigenvalue { second: f64 },

    #[error("extended hitting time routes disagree: p_M^-2 HT(0) = {primary}, s -> 1 limit = {limit} (relative {relative:e})")]
    LimitDisagreement {
        primary: f64,
        limit: f64,
        relative: f64,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("unitary completion failed: {0}")]
    CompletionFailure(String),

    #[error("window [{a}, {b}] out of range for rescaled length {len}")]
    WindowOutOfRange { a: u64, b: u64, len: u64 },

    #[error("rescaling factor must be a positive integer, got {0}")]
    NonIntegralScale(f64),

    #[error("precondition unmet: {0}")]
    PreconditionUnmet(String),

    #[error("conditioning event never observed in {samples} samples")]
    EventNeverObserved { samples: u64 },

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("trajectory exceeded the step cap of {cap}")]
    StepCapExceeded { cap: u64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable name of the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidMatrix { .. } => "InvalidMatrix",
            Error::InvalidDistribution(_) => "InvalidDistribution",
            Error::NonErgodic(_) => "NonErgodic",
            Error::NotStationary { .. } => "NotStationary",
            Error::NotReversible { .. } => "NotReversible",
            Error::InvalidMarkedSet(_) => "InvalidMarkedSet",
            Error::SpecViolation(_) => "SpecViolation",
            Error::ResultNotErgodic(_) => "ResultNotErgodic",
            Error::OutOfRange { .. } => "OutOfRange",
            Error::TooLarge { .. } => "TooLarge",
            Error::SolverDivergence { .. } => "SolverDivergence",
            Error::DegenerateTopEigenvalue { .. } => "DegenerateTopEigenvalue",
            Error::LimitDisagreement { .. } => "LimitDisagreement",
            Error::Numerical(_) => "Numerical",
            Error::CompletionFailure(_) => "CompletionFailure",
            Error::WindowOutOfRange { .. } => "WindowOutOfRange",
            Error::NonIntegralScale(_) => "NonIntegralScale",
            Error::PreconditionUnmet(_) => "PreconditionUnmet",
            Error::EventNeverObserved { .. } => "EventNeverObserved",
            Error::HypothesisViolated(_) => "HypothesisViolated",
            Error::StepCapExceeded { .. } => "StepCapExceeded",
            Error::Parse { .. } => "Parse",
            Error::Config(_) => "Config",
            Error::Io(_) => "Io",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
