use std::io;
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Numerical(#[from] metastab_core::Error),
    #[error("io error at {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type LabResult<T> = Result<T, LabError>;

impl LabError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        LabError::Io { path: path.into(), source }
    }

    /// 2 for bad input, 3 for numerical or truncation failures, 1 for IO.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) => 2,
            LabError::Numerical(e) if e.is_numerical() => 3,
            LabError::Numerical(_) => 2,
            LabError::Io { .. } | LabError::Csv(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            2 => "config",
            3 => "numerical",
            _ => "io",
        }
    }

    /// Single-line `key=value` form for scripts reading stderr.
    pub fn machine_line(&self) -> String {
        let msg = self.to_string().replace('"', "'");
        format!("error kind={} code={} message=\"{}\"", self.kind(), self.exit_code(), msg)
    }
}
