//! File formats, parallel batch execution and output management around
//! `epilab-core`.

pub mod cases;
pub mod config;
pub mod formats;
pub mod manifest;
pub mod runner;

use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] epilab_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("{what} line {line}: {message}")]
    Parse { what: &'static str, line: usize, message: String },
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io { path: path.to_path_buf(), source }
    }

    pub(crate) fn parse(what: &'static str, line: usize, message: impl Into<String>) -> Self {
        Error::Parse { what, line, message: message.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
