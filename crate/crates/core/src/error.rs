use thiserror::Error;

/// Errors raised by the toolkit.
///
/// Variants split into two families: input/validation problems (bad DSL,
/// invalid waiting-time trees, bad parameters) and numerical failures
/// (singular maps, reduction failures, stiff integration). The CLI maps the
/// first family to exit code 2 and the second to exit code 3.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{message} at {}", position_label(*line, *col))]
    Syntax { message: String, line: usize, col: usize },

    #[error("invalid waiting-time spec: {}", .0.join("; "))]
    InvalidSpec(Vec<String>),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("zero divisor")]
    ZeroDivisor,

    #[error("constant polynomial")]
    ConstantPolynomial,

    #[error("improper rational function")]
    ImproperRational,

    #[error("negative time")]
    NegativeTime,

    #[error("Talbot requires t > 0")]
    TalbotDomain,

    #[error("transform reduction failed: {0}")]
    ReductionFailed(String),

    #[error("map not invertible at t = {t}")]
    MapNotInvertible { t: f64 },

    #[error("not a stochastic matrix: {0}")]
    NotStochastic(String),

    #[error("not a probability vector: {0}")]
    NotProbability(String),

    #[error("non-conservative generator: column {column} sums to {sum}")]
    NonConservative { column: usize, sum: f64 },

    #[error("stiff or singular generator at t = {t}")]
    StiffOrSingular { t: f64 },

    #[error("not a counterexample: {0}")]
    NotCounterexample(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("io error: {0}")]
    Io(String),
}

fn position_label(line: usize, col: usize) -> String {
    if line <= 1 {
        format!("col {col}")
    } else {
        format!("line {line}, col {col}")
    }
}

impl Error {
    /// True for errors caused by user input rather than numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Syntax { .. }
                | Error::InvalidSpec(_)
                | Error::InvalidArgument(_)
                | Error::DimensionMismatch { .. }
                | Error::NotProbability(_)
                | Error::NotCounterexample(_)
                | Error::NegativeTime
                | Error::TalbotDomain
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
