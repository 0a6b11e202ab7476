use thiserror::Error;

/// Errors raised by the solvers and scenario tooling.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum PowerError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected} links, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("link index {index} out of range for {n} links")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("log of zero: link {0} has zero SINR")]
    ZeroSinr(usize),

    #[error("wrong branch: {0}")]
    WrongBranch(&'static str),

    #[error("degenerate channel: {0}")]
    DegenerateChannel(&'static str),

    #[error("degenerate polynomial: all coefficients are zero")]
    DegeneratePolynomial,

    #[error("sharing branch selected but no quadratic root lies in (0, {budget})")]
    SharingRootMissing { budget: f64 },

    #[error("QoS targets unreachable at any power (ad - bc·β1·β2 = {0} ≤ 0)")]
    StructurallyInfeasible(f64),

    #[error("link {0} is not a member of any cluster")]
    NotInCluster(usize),

    #[error("grid oracle limited to {max} links, got {got}")]
    OracleTooLarge { max: usize, got: usize },

    #[error("io: {0}")]
    Io(String),

    #[error("parse: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, PowerError>;

impl From<std::io::Error> for PowerError {
    fn from(e: std::io::Error) -> Self {
        PowerError::Io(e.to_string())
    }
}

impl From<csv::Error> for PowerError {
    fn from(e: csv::Error) -> Self {
        PowerError::Parse(e.to_string())
    }
}
