use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported dimension q={0} (expected 1, 2 or 3)")]
    Dimension(usize),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("basis index {0} is not part of the system")]
    Lookup(String),
    #[error("band coverage: coefficients needed below {needed}, available below {available}")]
    BandCoverage { needed: f64, available: f64 },
    #[error("kernel decays too slowly for pointwise summation (beta={beta} <= q={q}); enable allow_slow_decay for an empirical tail")]
    SlowDecay { beta: f64, q: usize },
    #[error("resolution: {0}")]
    Resolution(String),
    #[error("undefined: {0}")]
    Undefined(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Io(_) => 2,
            _ => 3,
        }
    }
}
