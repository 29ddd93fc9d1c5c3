use std::io;
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error("{}: format error at byte {offset}: {msg}", path.display())]
    Format { path: PathBuf, offset: u64, msg: String },

    #[error("{}:{line}: {msg}", path.display())]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("config: {0}")]
    Config(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error("detection records missing for [{}], failed for [{}]", missing.join(", "), failed.join(", "))]
    MissingRecords { missing: Vec<String>, failed: Vec<String> },

    #[error(transparent)]
    Core(#[from] dbloc_core::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> Error {
    let path = path.into();
    move |source| Error::Io { path, source }
}
