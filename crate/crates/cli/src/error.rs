use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("malformed config: {0}")]
    Config(String),

    #[error("malformed config: {0}")]
    Toml(#[from] toml::de::Error),

    #[error("unknown family {0:?}")]
    UnknownFamily(String),

    #[error("family {name:?}: {detail}")]
    Family { name: String, detail: String },

    #[error(transparent)]
    Library(#[from] slalom_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 when a checked property failed inside the library, 1 for bad input.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Library(slalom_core::Error::ShortcutMismatch { .. }) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
