use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid moduli: {0}")]
    InvalidModuli(String),
    #[error("point {0} is not interior to the domain")]
    NotInterior(Complex64),
    #[error("evaluation at the pole {0}")]
    Pole(Complex64),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("step size underflow at t = {t}")]
    StepUnderflow {
        t: f64,
        /// Flat moduli vector of the last accepted state.
        last: Vec<f64>,
    },
    #[error("curve sub-arc too long at point {index}; refine the curve")]
    Refinement { index: usize },
    #[error("singular drift: denominator {0:e}")]
    SingularDrift(f64),
    #[error("drift is not homogeneous of degree -1 (residual {0:e})")]
    NotHomogeneous(f64),
    #[error("invalid request: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
