use thiserror::Error;

/// Errors surfaced by the simulator library.
#[derive(Debug, Error)]
pub enum Error {
    /// A sampler or operation was called with out-of-range parameters.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A configuration value failed validation. `path` names the offending key.
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    /// Network construction could not satisfy the structural constraints.
    #[error("network generation failed: {0}")]
    Generation(String),

    /// An operation was applied to state that violates its precondition.
    #[error("logic error: {0}")]
    Logic(String),

    /// A metric could not be computed from the given inputs.
    #[error("computation error: {0}")]
    Computation(String),

    /// Statistical input admits no meaningful answer (e.g. zero variance).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
