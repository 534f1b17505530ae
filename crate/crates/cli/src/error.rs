use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] krrpm::Error),
    #[error("{path}: line {line}: {message}")]
    Csv { path: PathBuf, line: u64, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error("calibration failed: KS statistic {ks} is not below the threshold {threshold}")]
    CalibrationFailed { ks: f64, threshold: f64 },
}

impl CliError {
    /// 0 success, 1 numeric or validity failure, 2 usage or input error,
    /// 3 non-monotone ordinary/deleted prediction.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(krrpm::Error::Numeric(_)) | CliError::CalibrationFailed { .. } => 1,
            CliError::Core(krrpm::Error::NonMonotone { .. }) => 3,
            CliError::Core(krrpm::Error::Input(_)) | CliError::Csv { .. } | CliError::Io { .. } | CliError::Usage(_) => 2,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
