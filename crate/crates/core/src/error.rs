use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the function (negative radius, t <= 0, ...).
    #[error("domain error: {0}")]
    Domain(String),
    #[error("configuration error: {0}")]
    Config(String),
    /// A mathematical hypothesis of an estimator could not be established for the inputs.
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("simulation error: {0}")]
    Simulation(String),
}

impl Error {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Config(_) | Error::Precondition(_) => 2,
            Error::Numerical(_) | Error::Simulation(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
