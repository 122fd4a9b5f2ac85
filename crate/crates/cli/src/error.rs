use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("numerical error at eta = {eta_db} dB, trial {trial}: {source}")]
    Numerical {
        eta_db: f64,
        trial: usize,
        #[source]
        source: rrtx::Error,
    },

    #[error("numerical error: {0}")]
    Core(#[from] rrtx::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// Process exit status: 2 for configuration problems, 3 for numerical ones.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) | CliError::Csv(_) => 2,
            CliError::Numerical { .. } | CliError::Core(_) => 3,
        }
    }
}
