use thiserror::Error;

/// Errors produced by the simulator library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A configuration value is missing its invariants. `key` is the
    /// `section.field` name as it appears in the config file.
    #[error("{key}: {msg}")]
    Config { key: String, msg: String },

    /// The config text could not be parsed.
    #[error("{msg} (line {line})")]
    Parse { line: usize, msg: String },

    /// A function argument violated its precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The channel matrix handed to the precoder is not of full row rank.
    #[error("rank-deficient channel: near-dependent user rows {users:?}")]
    RankDeficient { users: Vec<usize> },

    /// A linear-algebra routine failed to produce a finite result.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Failure while computing the gain of one (user, AP) pair.
    #[error("channel entry (user {user}, ap {ap}): {source}")]
    Pair {
        user: usize,
        ap: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            msg: msg.into(),
        }
    }

    /// True for errors caused by user-supplied configuration rather than by
    /// the simulation itself.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config { .. } | Error::Parse { .. })
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
