use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Numerical {
        context: String,
        #[source]
        source: wentzell_core::Error,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("plot error: {0}")]
    Plot(String),
}

impl CliError {
    /// 2 for configuration problems, 3 for failures while running.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            _ => 3,
        }
    }
}

/// Attaches scenario context to core errors.
pub trait Context<T> {
    fn context(self, context: &str) -> Result<T, CliError>;
}

impl<T> Context<T> for wentzell_core::Result<T> {
    fn context(self, context: &str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Numerical {
            context: context.to_string(),
            source,
        })
    }
}
