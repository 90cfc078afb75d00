use std::path::PathBuf;

use thiserror::Error;

/// A configuration value failed validation. `key` names the offending entry
/// using the dotted path it has in a scenario file.
#[derive(Debug, Clone, Error, PartialEq)]
#[error("invalid value for `{key}`: {message}")]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    pub fn invalid(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            message: message.into(),
        }
    }

    /// Prefixes the key with a section name.
    pub fn within(mut self, section: &str) -> Self {
        self.key = format!("{section}.{}", self.key);
        self
    }
}

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("peak window [{start}, {end}) is empty or outside a series of length {len}")]
    BadWindow {
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("signed-rank test needs at least {min} pairs, got {got}")]
    TooFewPairs { min: usize, got: usize },
    #[error("scenario has {0} injection(s); peak comparison needs two")]
    NeedTwoInjections(usize),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("failed to parse scenario: {0}")]
    Parse(String),
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("output directory {0} does not exist")]
    MissingOutputDir(PathBuf),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("{0}")]
    Runtime(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Configuration problems are the caller's fault; everything else is a
    /// runtime failure.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::Parse(_)
                | Error::UnknownScenario(_)
                | Error::MissingOutputDir(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
