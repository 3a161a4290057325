use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaussError {
    #[error("{what} is singular or not positive definite (smallest eigenvalue {min_eig:e}, condition estimate {cond:e})")]
    Singular { what: String, min_eig: f64, cond: f64 },
    #[error("covariance is not symmetric positive semidefinite: {0}")]
    NotPsd(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl GaussError {
    pub(crate) fn singular(what: &str, m: &nalgebra::DMatrix<f64>) -> Self {
        let ev = m.clone().symmetric_eigenvalues();
        let min = ev.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = ev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        GaussError::Singular { what: what.to_string(), min_eig: min, cond: max.abs() / min.abs() }
    }
}
