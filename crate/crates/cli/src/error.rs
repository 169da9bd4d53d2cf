use vsd_core::Error as CoreError;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_DEGENERATE: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_USAGE,
            CliError::Core(CoreError::DegenerateData(_) | CoreError::DegenerateFit(_)) => {
                EXIT_DEGENERATE
            }
            CliError::Core(_) => EXIT_DATA,
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Core(e.into())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub(crate) fn io_err(context: impl std::fmt::Display, e: std::io::Error) -> CliError {
    CliError::Core(CoreError::Io {
        context: context.to_string(),
        source: e,
    })
}
