use std::path::PathBuf;

/// Failures surfaced by the solvers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("complex output: multiplier is not Hermitian (imaginary part {0:.3e})")]
    ComplexOutput(f64),
    #[error("admissibility violation: min depth {h_min:.6} below floor {floor:.6}")]
    AdmissibilityViolation { h_min: f64, floor: f64 },
    #[error("elliptic solve did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("negative radicand {0:.3e} in principal symbol")]
    NegativeRadicand(f64),
    #[error("step rejected at t = {t:.6}: relative jump {jump:.3e} exceeds {limit:.3e}")]
    StepRejected { t: f64, jump: f64, limit: f64 },
    #[error("nonzero X-mean {0:.3e}: data must lie in the range of the x-derivative")]
    NonzeroXMean(f64),
    #[error("negative energy {0:.3e}")]
    NegativeEnergy(f64),
    #[error("frame mismatch: tau = {tau:.6} but expected {expected:.6}")]
    FrameMismatch { tau: f64, expected: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed snapshot: {reason}")]
    Snapshot { path: PathBuf, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
