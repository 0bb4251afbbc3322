use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] serm_core::error::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    /// Every violated configuration field, reported together.
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("{context} line {line}: {message}")]
    Parse {
        context: &'static str,
        line: usize,
        message: String,
    },

    #[error("label column `{0}` not found in header")]
    MissingLabelColumn(String),

    #[error("no usable rows ({rejected} rejected)")]
    NoUsableRows { rejected: usize },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
        let path = path.into();
        move |source| Error::Io { path, source }
    }

    /// Short machine-readable category for error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Core(_) => "core",
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
            Error::Config(_) => "config",
            Error::Parse { .. } => "parse",
            Error::MissingLabelColumn(_) => "missing_label_column",
            Error::NoUsableRows { .. } => "no_usable_rows",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
