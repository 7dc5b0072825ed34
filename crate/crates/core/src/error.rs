use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid spectral measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid aspect ratio {0}: must be finite and positive")]
    InvalidAspectRatio(f64),
    #[error("point is not in the upper half plane (imaginary part {0})")]
    NotUpperHalfPlane(f64),
    #[error("invalid solver options: {0}")]
    InvalidOptions(String),
    #[error("pole of the companion value map at {re}{im:+}i")]
    Pole { re: f64, im: f64 },
    #[error("fixed-point solver did not converge after {iterations} iterations (last residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("root isolation failed on ({lo}, {hi})")]
    RootFinding { lo: f64, hi: f64 },
    #[error("empty eigenvalue list")]
    EmptySpectrum,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),
    #[error("tridiagonal QL iteration did not converge within {0} sweeps")]
    EigenNonConvergence(usize),
    #[error("student-t degrees of freedom {dof} must exceed 6 + moment margin ({margin})")]
    InvalidDof { dof: f64, margin: f64 },
    #[error("invalid filter: {0}")]
    InvalidFilter(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("no spectral gap: {0}")]
    NoGap(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
