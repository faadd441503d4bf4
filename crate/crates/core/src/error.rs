use std::path::PathBuf;

/// Errors produced anywhere in the pipeline.
///
/// Variants are grouped so the CLI can map them onto its exit-code contract
/// (see [`Error::kind`]).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{file}:{line}: {msg}")]
    Parse {
        file: String,
        line: usize,
        msg: String,
    },

    #[error("structural error: {0}")]
    Structural(String),

    #[error("unknown source label {label:?} for {source_name}")]
    Mapping { label: String, source_name: String },

    #[error("capacity error: {context} needs {requested} distinct rows but only {available} exist")]
    Capacity {
        context: String,
        requested: usize,
        available: usize,
    },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("label error: {0}")]
    Label(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("unsupported version {found} (max supported {supported})")]
    Version { found: u32, supported: u32 },

    #[error("corrupt file: {0}")]
    Corrupt(String),

    #[error("empty evaluation: confusion matrix has no samples")]
    EmptyEvaluation,

    #[error("invalid input: {0}")]
    Input(String),
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numeric,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Param(_) | Error::Config(_) => ErrorKind::Config,
            Error::Numeric(_) => ErrorKind::Numeric,
            _ => ErrorKind::Data,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
