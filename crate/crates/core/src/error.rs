use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised anywhere in the simulator. Each variant maps onto one
/// process exit code of the CLI (see [`Error::exit_code`]).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A configuration problem, optionally tied to a key and a 1-based line.
    #[error("{}", config_message(.key, .line, .message))]
    Config {
        key: Option<String>,
        line: Option<usize>,
        message: String,
    },

    #[error("data error: {0}")]
    Data(String),

    #[error("scheme mismatch: {0}")]
    SchemeMismatch(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn config_message(key: &Option<String>, line: &Option<usize>, message: &str) -> String {
    match (key, line) {
        (Some(k), Some(l)) => format!("config key `{k}` (line {l}): {message}"),
        (Some(k), None) => format!("config key `{k}`: {message}"),
        (None, Some(l)) => format!("config line {l}: {message}"),
        (None, None) => format!("config: {message}"),
    }
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable code, printed ahead of the human message.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) | Error::Config { .. } => "E_CONFIG",
            Error::Data(_) | Error::SchemeMismatch(_) => "E_DATA",
            Error::Io { .. } => "E_IO",
        }
    }

    /// 2 config error, 3 data error, 4 I/O error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) | Error::Config { .. } => 2,
            Error::Data(_) | Error::SchemeMismatch(_) => 3,
            Error::Io { .. } => 4,
        }
    }
}
