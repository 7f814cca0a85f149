use thiserror::Error;

/// Process exit classes.
pub const EXIT_IO: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_SIZE: u8 = 3;
pub const EXIT_NUMERIC: u8 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] noisy_trotter::Error),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{failed} of {total} cells failed")]
    Partial { failed: usize, total: usize },
}

impl CliError {
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        use noisy_trotter::Error as E;
        match self {
            Self::Config(_) => EXIT_CONFIG,
            Self::Io { .. } | Self::Partial { .. } => EXIT_IO,
            Self::Core(e) => match e {
                E::SizeLimit { .. } => EXIT_SIZE,
                E::Numerical(_)
                | E::NoFiniteOptimum(_)
                | E::Unreachable(_)
                | E::NotHermitian { .. }
                | E::SupportMismatch { .. }
                | E::NonPositiveValue { .. } => EXIT_NUMERIC,
                E::Io(_) => EXIT_IO,
                _ => EXIT_CONFIG,
            },
        }
    }
}
