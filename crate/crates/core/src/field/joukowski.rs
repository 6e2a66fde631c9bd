//! Closed-form potentials of Chebyshev-weighted densities on `[-1, 1]`.
//!
//! With `w = t + sqrt(t - 1) sqrt(t + 1)` (so `|w| >= 1`, cut on `[-1, 1]`):
//!
//! ```text
//! (1/pi) ∫ ln|t - s| T_0(s) / sqrt(1 - s^2) ds = ln|w| - ln 2
//! (1/pi) ∫ ln|t - s| T_k(s) / sqrt(1 - s^2) ds = -Re(w^-k) / k
//! ```
//!
//! The additive `ln 2` is dropped since every basis function appears in a difference.

use num_complex::Complex64;

/// Returns `(w, s)` with `s = sqrt(t - 1) sqrt(t + 1) = w - t`.
#[inline]
pub fn inverse(t: Complex64) -> (Complex64, Complex64) {
    let s = (t - 1.0).sqrt() * (t + 1.0).sqrt();
    (t + s, s)
}

/// Values `log w, -w^-1, -w^-2 / 2, ...` of the analytic basis at `t`, written into `out`.
#[inline]
pub fn analytic_modes(t: Complex64, out: &mut [Complex64]) {
    let (w, _) = inverse(t);
    fill_modes(w, out);
}

#[inline]
pub fn fill_modes(w: Complex64, out: &mut [Complex64]) {
    if out.is_empty() {
        return;
    }
    out[0] = w.ln();
    let winv = w.inv();
    let mut p = winv;
    for (k, o) in out.iter_mut().enumerate().skip(1) {
        *o = -p / k as f64;
        p *= winv;
    }
}

/// `t`-derivatives of the analytic modes: `1/s, w^-1/s, w^-2/s, ...`.
#[inline]
pub fn analytic_mode_derivatives(t: Complex64, out: &mut [Complex64]) {
    let (w, s) = inverse(t);
    let sinv = s.inv();
    let winv = w.inv();
    let mut p = Complex64::new(1.0, 0.0);
    for o in out.iter_mut() {
        *o = p * sinv;
        p *= winv;
    }
}

/// Real parts of the modes on the cut itself at `s = cos(theta)`.
#[inline]
pub fn on_cut_modes(theta: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 0.0;
    for (k, o) in out.iter_mut().enumerate().skip(1) {
        *o = -(k as f64 * theta).cos() / k as f64;
    }
}

/// Chebyshev nodes of the first kind, as angles.
pub fn chebyshev_angles(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (2 * i + 1) as f64 * std::f64::consts::PI / (2 * n) as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    // Gauss-Chebyshev quadrature of the log potential, independent of the closed form.
    fn potential_by_quadrature(t: Complex64, k: usize) -> f64 {
        let n = 4000;
        (0..n)
            .map(|i| {
                let th = (2 * i + 1) as f64 * PI / (2 * n) as f64;
                let s = th.cos();
                (t - s).norm().ln() * (k as f64 * th).cos()
            })
            .sum::<f64>()
            / n as f64
    }

    #[test]
    fn closed_form_matches_quadrature() {
        let mut modes = [Complex64::new(0.0, 0.0); 5];
        for &t in &[
            Complex64::new(0.3, 0.8),
            Complex64::new(-2.0, 0.1),
            Complex64::new(1.5, -0.4),
        ] {
            analytic_modes(t, &mut modes);
            assert!((modes[0].re - 2f64.ln() - potential_by_quadrature(t, 0)).abs() < 1e-9);
            for k in 1..5 {
                assert!(
                    (modes[k].re - potential_by_quadrature(t, k)).abs() < 1e-9,
                    "k={k}"
                );
            }
        }
    }

    #[test]
    fn modes_are_continuous_onto_the_cut() {
        let th: f64 = 1.1;
        let mut on = [0.0; 6];
        on_cut_modes(th, &mut on);
        let mut off = [Complex64::new(0.0, 0.0); 6];
        analytic_modes(Complex64::new(th.cos(), 1e-12), &mut off);
        for k in 0..6 {
            assert!((on[k] - off[k].re).abs() < 1e-9);
        }
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        let t = Complex64::new(0.4, 0.7);
        let h = 1e-6;
        let mut a = [Complex64::new(0.0, 0.0); 4];
        let mut b = a;
        let mut d = a;
        analytic_modes(t + h, &mut a);
        analytic_modes(t - h, &mut b);
        analytic_mode_derivatives(t, &mut d);
        for k in 0..4 {
            assert!(((a[k] - b[k]) / (2.0 * h) - d[k]).norm() < 1e-7);
        }
    }
}
