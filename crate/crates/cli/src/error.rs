use thiserror::Error;

/// Process exit codes.
pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;
pub const EXIT_PROPERTY: u8 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] fieldroad_core::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// One or more checks of `verify` failed.
    #[error("property failure: {0}")]
    Property(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use fieldroad_core::Error as E;
        match self {
            Self::Config(_) => EXIT_CONFIG,
            Self::Core(E::Config(_) | E::Domain(_)) => EXIT_CONFIG,
            Self::Core(_) | Self::Io(_) => EXIT_NUMERICAL,
            Self::Property(_) => EXIT_PROPERTY,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
