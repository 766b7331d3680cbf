use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent user input.
    #[error("invalid input: {0}")]
    Validation(String),

    /// Argument outside the domain of a function, e.g. evaluation at or below a pole.
    #[error("domain error: {0}")]
    Domain(String),

    /// A component is below the phase transition where overall recovery requires it above.
    #[error("overall recovery needs every component above the transition: {0}")]
    Hypothesis(String),

    /// A numerical guarantee did not hold. Always a bug or an extreme input.
    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the CLI: 2 for usage/validation problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::Domain(_) | Error::Hypothesis(_) | Error::Json(_) => 2,
            Error::Internal(_) | Error::Io(_) => 1,
        }
    }
}
