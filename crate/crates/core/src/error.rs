use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum CvError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("singular matrix (condition number {cond:.3e})")]
    Singular { cond: f64 },
    #[error("singular term ({i},{j},{k}): condition number {cond:.3e}")]
    SingularTerm { i: usize, j: usize, k: usize, cond: f64 },
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid channel: {0}")]
    InvalidChannel(String),
    #[error("invalid effect: {0}")]
    InvalidEffect(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("reality violation: imaginary part {imag:.3e}")]
    Reality { imag: f64 },
    #[error("probability {0} outside [0, 1]")]
    Probability(f64),
    #[error("cutoff {cutoff} too small (lost trace {lost:.3e}); try cutoff {suggested}")]
    Cutoff { cutoff: usize, lost: f64, suggested: usize },
    #[error("component limit exceeded: {count} > {limit}")]
    ComponentOverflow { count: usize, limit: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, CvError>;
