use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("argument outside the domain of {function}: {detail}")]
    Domain {
        function: &'static str,
        detail: String,
    },

    #[error("epsilon {epsilon} is outside the admissible interval (0, {bound}]")]
    EpsilonOutOfRange { epsilon: f64, bound: f64 },

    #[error("iteration did not converge: {0}")]
    NoConvergence(String),

    #[error("no sign change of the derivative in [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("dense block {rows}x{cols} needs {bytes} bytes, budget is {budget}")]
    BudgetExceeded {
        rows: usize,
        cols: usize,
        bytes: usize,
        budget: usize,
    },

    #[error("empty matrix or index range")]
    Empty,

    #[error("too few points for a decay fit: {got} < {need}")]
    TooFewPoints { got: usize, need: usize },

    #[error("column {column} reached mass {mass} < 1 before the horizon {horizon}")]
    MassNotReached {
        column: usize,
        mass: f64,
        horizon: usize,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for errors caused by bad configuration rather than numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_) | Error::EpsilonOutOfRange { .. } | Error::BudgetExceeded { .. }
        )
    }
}
