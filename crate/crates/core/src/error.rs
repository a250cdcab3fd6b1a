use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration value or file. `line` is 1-based when the
    /// problem was found while parsing a config text.
    #[error("{}", fmt_config(*.line, .message))]
    Config { line: Option<usize>, message: String },

    /// An operation was called with arguments violating its contract.
    #[error("usage error: {0}")]
    Usage(String),

    /// A background ROI integrated to zero, which means the readout area is dead.
    #[error("degenerate background: {0}")]
    DegenerateBackground(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn fmt_config(line: Option<usize>, message: &str) -> String {
    match line {
        Some(l) => format!("config error at line {l}: {message}"),
        None => format!("config error: {message}"),
    }
}

impl Error {
    pub(crate) fn config(message: impl Into<String>) -> Self {
        Error::Config { line: None, message: message.into() }
    }

    pub(crate) fn config_at(line: usize, message: impl Into<String>) -> Self {
        Error::Config { line: Some(line), message: message.into() }
    }

    pub(crate) fn usage(message: impl Into<String>) -> Self {
        Error::Usage(message.into())
    }
}
