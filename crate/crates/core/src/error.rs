use thiserror::Error;

/// Everything that can go wrong in a simulation, prediction or I/O step.
#[derive(Debug, Error)]
pub enum SedError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("integration diverged at t = {t}")]
    Diverged { t: f64 },

    #[error("particle escaped the confining region at t = {t} (x = {x})")]
    Escaped { t: f64, x: f64 },

    #[error("statistical precondition violated: {0}")]
    Statistical(String),

    #[error("convergence failure: {0}")]
    Convergence(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("ensemble failed: {failed} of {total} trajectories diverged")]
    EnsembleDiverged { failed: usize, total: usize },

    #[error("outputs differ from the recorded manifest: {0}")]
    Reproducibility(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl SedError {
    /// Process exit status used by the command-line front end.
    ///
    /// 0 success, 2 config, 3 numeric divergence, 4 statistical precondition, 5 internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            SedError::Config(_) | SedError::Json(_) => 2,
            SedError::Diverged { .. }
            | SedError::Escaped { .. }
            | SedError::EnsembleDiverged { .. }
            | SedError::Numerical(_)
            | SedError::Convergence(_) => 3,
            SedError::Statistical(_) => 4,
            SedError::Resource(_) | SedError::Reproducibility(_) | SedError::Io(_) | SedError::Csv(_) => 5,
        }
    }
}

pub type Result<T> = std::result::Result<T, SedError>;

pub(crate) fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(SedError::Config(msg.into()))
}
