use thiserror::Error;

/// Errors produced by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// A function argument fell outside its valid domain.
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    /// A scenario or parameter file failed validation.
    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    /// An RRC event that is not legal in the current state.
    #[error("protocol violation in {state}: {reason}")]
    Protocol { state: String, reason: String },

    /// Explicit time step exceeds the Von Neumann bound.
    #[error("time step {dt:e} s exceeds the stability limit {limit:e} s")]
    Unstable { dt: f64, limit: f64 },

    #[error("dataset `{name}`: {reason}")]
    Dataset { name: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidArgument {
        name,
        reason: reason.into(),
    }
}
