use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    /// Bad configuration or initial data rejected before any work.
    #[error("config: {0}")]
    Config(String),
    #[error("setup: {0}")]
    Setup(#[source] stripwaves::Error),
    /// A numerical failure during a run, tagged with the monitor that saw it.
    #[error("{monitor}: {source}")]
    Numerical {
        monitor: String,
        #[source]
        source: stripwaves::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {reason}")]
    Output { path: PathBuf, reason: String },
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Setup(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;

pub(crate) fn numerical(monitor: &str) -> impl FnOnce(stripwaves::Error) -> HarnessError + '_ {
    move |source| HarnessError::Numerical {
        monitor: monitor.to_string(),
        source,
    }
}
