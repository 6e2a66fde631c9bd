//! Harmonic measures, Green functions and the Loewner vector field of a standard domain.
//!
//! Both engines represent harmonic functions by slit densities with square-root endpoint
//! behaviour, expanded in Chebyshev modes. The logarithmic potential of such a density has
//! a closed form in the Joukowski variable `w = t + sqrt(t^2 - 1)`, so the representation is
//! exact up to truncation of the Chebyshev series and converges geometrically.

mod bilateral;
mod chordal;
pub(crate) use chordal::neville_at_zero;
mod joukowski;

pub use bilateral::{BilateralField, BilateralKernel};
pub use chordal::{ChordalField, PsiKernel};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Solver settings shared by both engines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldConfig {
    /// Target residual at evaluation points at least 0.1 away from the slits.
    pub accuracy: f64,
    /// Upper bound on the number of Chebyshev modes per slit.
    pub max_modes: usize,
    /// Upper bound on the Fourier degree on the circles (bilateral only).
    pub max_fourier: usize,
}

impl Default for FieldConfig {
    fn default() -> Self {
        Self {
            accuracy: 1e-6,
            max_modes: 160,
            max_fourier: 160,
        }
    }
}

impl FieldConfig {
    pub fn with_accuracy(accuracy: f64) -> Self {
        Self {
            accuracy,
            ..Self::default()
        }
    }

    /// Truncation tolerance for the series; four digits below the requested accuracy.
    pub(crate) fn series_tol(&self) -> f64 {
        (self.accuracy * 1e-4).clamp(1e-15, 1e-3)
    }
}

/// `psi = psi0 + k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldValue {
    pub psi: Complex64,
    pub k: f64,
    pub psi0: Complex64,
}

/// Number of series terms needed for geometric decay `rho^-n <= tol`.
pub(crate) fn modes_for(rho: f64, tol: f64, min: usize, max: usize) -> usize {
    if !(rho > 1.0) {
        return max;
    }
    let n = (tol.ln() / -rho.ln()).ceil() as usize + 4;
    n.clamp(min, max)
}

/// `k`-th derivative of an analytic function by the trapezoidal rule on a circle.
pub fn cauchy_derivative<F>(f: F, z: Complex64, radius: f64, order: usize) -> Complex64
where
    F: Fn(Complex64) -> Complex64,
{
    let n = 48usize.max(4 * order + 16);
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..n {
        let th = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
        let e = Complex64::from_polar(1.0, th);
        acc += f(z + e * radius) * e.powi(-(order as i32));
    }
    let fact: f64 = (1..=order).map(|i| i as f64).product();
    acc * fact / (n as f64 * radius.powi(order as i32))
}
