use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::joukowski::{self, chebyshev_angles};
use super::{modes_for, FieldConfig, FieldValue};
use crate::domain::{ChordalModuli, Slit};
use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Field engine for a chordal standard domain (upper half-plane minus horizontal slits).
///
/// Every represented harmonic function is
///
/// ```text
/// u(z) = Re sum_j sum_k a_jk [Phi_k(t_j(z)) - Phi_k(tbar_j(z))]
/// ```
///
/// with `t_j = (z - c_j) / h_j`, `tbar_j = (z - conj(c_j)) / h_j` and `Phi_k` the Joukowski
/// modes. Every term vanishes on the real axis and at infinity, so only the slit boundary
/// conditions are collocated (at Chebyshev nodes, one square block per slit).
///
/// Boundary components are indexed `0..n-1` for the slits and `n - 1` for the real axis.
#[derive(Debug, Clone)]
pub struct ChordalField {
    moduli: ChordalModuli,
    config: FieldConfig,
    modes: usize,
    centers: Vec<Complex64>,
    halfs: Vec<f64>,
    angles: Vec<f64>,
    lu: Option<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
    /// Coefficients of the harmonic measure of each slit.
    omega: Vec<DVector<f64>>,
    /// Coefficients of `1 - omega_outer`.
    inner_sum: DVector<f64>,
    /// `log_modes[m][j]`: coefficient of the logarithmic mode on slit `m` in `omega_j`.
    log_modes: DMatrix<f64>,
    log_modes_lu: Option<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
}

impl ChordalField {
    pub fn new(moduli: &ChordalModuli) -> Result<Self> {
        Self::with_config(moduli, FieldConfig::default())
    }

    pub fn with_config(moduli: &ChordalModuli, config: FieldConfig) -> Result<Self> {
        let violations = moduli.validate();
        if !violations.is_empty() {
            let msg: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            return Err(Error::InvalidModuli(msg.join("; ")));
        }
        let n = moduli.slits.len();
        let centers: Vec<Complex64> = moduli.slits.iter().map(Slit::center).collect();
        let halfs: Vec<f64> = moduli.slits.iter().map(Slit::half_length).collect();
        let modes = choose_modes(moduli, &config);
        let angles = chebyshev_angles(modes);
        let mut field = Self {
            moduli: moduli.clone(),
            config,
            modes,
            centers,
            halfs,
            angles,
            lu: None,
            omega: Vec::new(),
            inner_sum: DVector::zeros(0),
            log_modes: DMatrix::zeros(n, n),
            log_modes_lu: None,
        };
        if n == 0 {
            return Ok(field);
        }

        let size = n * modes;
        let mut a = DMatrix::<f64>::zeros(size, size);
        let mut row = vec![0.0; size];
        for m in 0..n {
            for (i, &th) in field.angles.iter().enumerate() {
                field.real_basis_on_slit(m, th, &mut row);
                for (c, v) in row.iter().enumerate() {
                    a[(m * modes + i, c)] = *v;
                }
            }
        }
        let lu = a.lu();
        if !lu.is_invertible() {
            return Err(Error::Numeric("singular collocation matrix".into()));
        }
        field.lu = Some(lu);

        for j in 0..n {
            let rhs = DVector::from_fn(size, |r, _| if r / modes == j { 1.0 } else { 0.0 });
            let c = field.solve_vec(rhs)?;
            field.omega.push(c);
        }
        field.inner_sum = field.solve_vec(DVector::from_element(size, 1.0))?;
        let log_modes = DMatrix::from_fn(n, n, |m, j| field.omega[j][m * modes]);
        let lm_lu = log_modes.clone().lu();
        if !lm_lu.is_invertible() {
            return Err(Error::Numeric("period matrix is singular".into()));
        }
        field.log_modes = log_modes;
        field.log_modes_lu = Some(lm_lu);
        Ok(field)
    }

    pub fn moduli(&self) -> &ChordalModuli {
        &self.moduli
    }

    pub fn config(&self) -> &FieldConfig {
        &self.config
    }

    /// Chebyshev modes per slit.
    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn slit_count(&self) -> usize {
        self.moduli.slits.len()
    }

    /// Collocation points on slit `m`.
    pub fn collocation_points(&self, m: usize) -> Vec<Complex64> {
        self.angles
            .iter()
            .map(|th| self.centers[m] + self.halfs[m] * th.cos())
            .collect()
    }

    fn solve_vec(&self, rhs: DVector<f64>) -> Result<DVector<f64>> {
        let lu = self.lu.as_ref().expect("solve on a domain without slits");
        lu.solve(&rhs)
            .ok_or_else(|| Error::Numeric("collocation solve failed".into()))
    }

    /// Coefficients of the harmonic function with boundary values `data` on the slits and
    /// zero on the real axis.
    pub fn solve_dirichlet<F: Fn(Complex64) -> f64>(&self, data: F) -> Result<DVector<f64>> {
        let n = self.slit_count();
        if n == 0 {
            return Ok(DVector::zeros(0));
        }
        let modes = self.modes;
        let mut rhs = DVector::zeros(n * modes);
        for m in 0..n {
            for (i, th) in self.angles.iter().enumerate() {
                rhs[m * modes + i] = data(self.centers[m] + self.halfs[m] * th.cos());
            }
        }
        self.solve_vec(rhs)
    }

    /// Real parts of every basis function at the collocation node `cos(theta)` of slit `m`.
    fn real_basis_on_slit(&self, m: usize, theta: f64, out: &mut [f64]) {
        let modes = self.modes;
        let z = self.centers[m] + self.halfs[m] * theta.cos();
        let mut buf = vec![Complex64::new(0.0, 0.0); modes];
        let mut own = vec![0.0; modes];
        for j in 0..self.slit_count() {
            let block = &mut out[j * modes..(j + 1) * modes];
            if j == m {
                joukowski::on_cut_modes(theta, &mut own);
                block.copy_from_slice(&own);
            } else {
                joukowski::analytic_modes((z - self.centers[j]) / self.halfs[j], &mut buf);
                for (b, v) in block.iter_mut().zip(&buf) {
                    *b = v.re;
                }
            }
            let tb = (z - self.centers[j].conj()) / self.halfs[j];
            joukowski::analytic_modes(tb, &mut buf);
            for (b, v) in block.iter_mut().zip(&buf) {
                *b -= v.re;
            }
        }
    }

    /// Analytic basis functions at `z`, laid out as `j * modes + k`.
    pub(crate) fn analytic_basis(&self, z: Complex64, out: &mut [Complex64]) {
        let modes = self.modes;
        let mut img = vec![Complex64::new(0.0, 0.0); modes];
        for j in 0..self.slit_count() {
            let block = &mut out[j * modes..(j + 1) * modes];
            joukowski::analytic_modes((z - self.centers[j]) / self.halfs[j], block);
            joukowski::analytic_modes((z - self.centers[j].conj()) / self.halfs[j], &mut img);
            for (b, v) in block.iter_mut().zip(&img) {
                *b -= v;
            }
        }
    }

    /// `z`-derivatives of the analytic basis functions.
    pub(crate) fn analytic_basis_derivative(&self, z: Complex64, out: &mut [Complex64]) {
        let modes = self.modes;
        let mut img = vec![Complex64::new(0.0, 0.0); modes];
        for j in 0..self.slit_count() {
            let h = self.halfs[j];
            let block = &mut out[j * modes..(j + 1) * modes];
            joukowski::analytic_mode_derivatives((z - self.centers[j]) / h, block);
            joukowski::analytic_mode_derivatives((z - self.centers[j].conj()) / h, &mut img);
            for (b, v) in block.iter_mut().zip(&img) {
                *b = (*b - v) / h;
            }
        }
    }

    /// Analytic function `sum c_i B_i(z)` whose real part is the represented harmonic function.
    pub fn eval_analytic(&self, coefs: &DVector<f64>, z: Complex64) -> Complex64 {
        if coefs.is_empty() {
            return Complex64::new(0.0, 0.0);
        }
        let mut b = vec![Complex64::new(0.0, 0.0); coefs.len()];
        self.analytic_basis(z, &mut b);
        b.iter().zip(coefs.iter()).map(|(v, c)| v * *c).sum()
    }

    pub fn eval_harmonic(&self, coefs: &DVector<f64>, z: Complex64) -> f64 {
        self.eval_analytic(coefs, z).re
    }

    fn eval_derivative(&self, coefs: &DVector<f64>, z: Complex64) -> Complex64 {
        if coefs.is_empty() {
            return Complex64::new(0.0, 0.0);
        }
        let mut b = vec![Complex64::new(0.0, 0.0); coefs.len()];
        self.analytic_basis_derivative(z, &mut b);
        b.iter().zip(coefs.iter()).map(|(v, c)| v * *c).sum()
    }

    fn check_interior(&self, z: Complex64) -> Result<()> {
        if !(z.im > 0.0) || !z.re.is_finite() {
            return Err(Error::NotInterior(z));
        }
        let scale = self.moduli.min_height().unwrap_or(1.0);
        if self.moduli.distance_to_slits(z) <= 1e-14 * scale {
            return Err(Error::NotInterior(z));
        }
        Ok(())
    }

    /// Harmonic measure of boundary component `j` at `z`.
    pub fn harmonic_measure(&self, j: usize, z: Complex64) -> Result<f64> {
        let n = self.slit_count();
        if j > n {
            return Err(Error::Precondition(format!(
                "boundary index {j} out of range"
            )));
        }
        self.check_interior(z)?;
        if j == n {
            Ok(1.0 - self.eval_harmonic(&self.inner_sum, z))
        } else {
            Ok(self.eval_harmonic(&self.omega[j], z))
        }
    }

    /// Period matrix `alpha_kj`: flux of `omega_k` through slit `j`, normal pointing out of the domain.
    pub fn period_matrix(&self) -> DMatrix<f64> {
        let n = self.slit_count();
        // a unit logarithmic mode on slit j carries flux -2 pi through that slit
        DMatrix::from_fn(n, n, |k, j| {
            -2.0 * std::f64::consts::PI * self.log_modes[(j, k)]
        })
    }

    /// `P = alpha / 2 pi`.
    pub fn p_matrix(&self) -> DMatrix<f64> {
        self.period_matrix() / (2.0 * std::f64::consts::PI)
    }

    /// Inward (upward) normal derivative of each slit harmonic measure at the real point `xi`.
    pub fn omega_normal_derivative(&self, xi: f64) -> Vec<f64> {
        let z = Complex64::new(xi, 0.0);
        // d/dy Re F = -Im F'
        self.omega
            .iter()
            .map(|c| -self.eval_derivative(c, z).im)
            .collect()
    }

    /// Slit heights of the image domain computed as `P^-1 dω/dn(xi)`, the second route to the
    /// heights read off from the period condition in [`PsiKernel::lambda`].
    pub fn slit_levels_from_periods(&self, xi: f64) -> Result<Vec<f64>> {
        let n = self.slit_count();
        if n == 0 {
            return Ok(Vec::new());
        }
        let d = DVector::from_vec(self.omega_normal_derivative(xi));
        let p = self.p_matrix();
        let sol = p
            .lu()
            .solve(&d)
            .ok_or_else(|| Error::Numeric("singular period matrix".into()))?;
        Ok(sol.iter().copied().collect())
    }

    /// Green function with pole at `z0`.
    pub fn green(&self, z: Complex64, z0: Complex64) -> Result<f64> {
        self.check_interior(z)?;
        self.check_interior(z0)?;
        if (z - z0).norm() == 0.0 {
            return Err(Error::Pole(z));
        }
        let half_plane = ((z - z0.conj()) / (z - z0)).norm().ln();
        if self.slit_count() == 0 {
            return Ok(half_plane);
        }
        let v = self.green_correction(z0)?;
        Ok(half_plane - self.eval_harmonic(&v, z))
    }

    /// Coefficients of the regular part subtracted from the half-plane Green function.
    pub fn green_correction(&self, z0: Complex64) -> Result<DVector<f64>> {
        self.solve_dirichlet(|z| ((z - z0.conj()) / (z - z0)).norm().ln())
    }

    /// Analytic completion in `z` of `G(z, z0)`, up to an imaginary constant.
    pub fn green_analytic(
        &self,
        correction: &DVector<f64>,
        z: Complex64,
        z0: Complex64,
    ) -> Complex64 {
        (z - z0.conj()).ln() - (z - z0).ln() - self.eval_analytic(correction, z)
    }

    /// Precomputes everything needed to evaluate `Psi(., xi)` repeatedly.
    pub fn kernel(&self, xi: f64) -> Result<PsiKernel<'_>> {
        if !xi.is_finite() {
            return Err(Error::Precondition(format!(
                "driving point {xi} is not finite"
            )));
        }
        let n = self.slit_count();
        if n == 0 {
            return Ok(PsiKernel {
                field: self,
                xi,
                coefs: DVector::zeros(0),
                lambda: Vec::new(),
                k: 0.0,
            });
        }
        let poisson = self.solve_dirichlet(|z| {
            let d = z - xi;
            2.0 * z.im / d.norm_sqr()
        })?;
        let modes = self.modes;
        let b0 = DVector::from_fn(n, |m, _| poisson[m * modes]);
        let lambda = self
            .log_modes_lu
            .as_ref()
            .expect("period system present")
            .solve(&b0)
            .ok_or_else(|| Error::Numeric("period system solve failed".into()))?;
        let mut coefs = -poisson;
        for (j, l) in lambda.iter().enumerate() {
            coefs.axpy(*l, &self.omega[j], 1.0);
        }
        for m in 0..n {
            coefs[m * modes] = 0.0;
        }
        let mut kern = PsiKernel {
            field: self,
            xi,
            coefs,
            lambda: lambda.iter().copied().collect(),
            k: 0.0,
        };
        kern.k = kern.regular_part(Complex64::new(xi, 0.0)).re;
        Ok(kern)
    }

    /// The Loewner vector field `Psi(z, xi)`, normalized to vanish at infinity.
    pub fn psi(&self, z: Complex64, xi: f64) -> Result<Complex64> {
        self.check_interior(z)?;
        self.kernel(xi)?.psi(z)
    }

    /// `k(xi) = lim_{z -> xi} (Psi(z, xi) + 2 / (z - xi))`.
    pub fn k_const(&self, xi: f64) -> Result<f64> {
        Ok(self.kernel(xi)?.k)
    }

    /// `Psi0 = Psi - k`, normalized at the pole.
    pub fn psi0(&self, z: Complex64, xi: f64) -> Result<Complex64> {
        self.check_interior(z)?;
        let k = self.kernel(xi)?;
        Ok(k.psi(z)? - k.k)
    }

    pub fn field_value(&self, z: Complex64, xi: f64) -> Result<FieldValue> {
        self.check_interior(z)?;
        let k = self.kernel(xi)?;
        let psi = k.psi(z)?;
        Ok(FieldValue {
            psi,
            k: k.k,
            psi0: psi - k.k,
        })
    }

    /// Richardson-extrapolated limit of `Psi(xi + i eps) + 2 / (i eps)` over
    /// `eps = 1e-1 .. 1e-3`; an independent route to `k(xi)`. Returns `(limit, residual)`.
    pub fn k_by_extrapolation(&self, xi: f64) -> Result<(f64, f64)> {
        let kern = self.kernel(xi)?;
        let scale = self.moduli.min_height().unwrap_or(1.0);
        let eps: Vec<f64> = (0..6).map(|i| 0.1 * scale * 0.4f64.powi(i)).collect();
        let vals: Vec<f64> = eps
            .iter()
            .map(|&e| {
                let d = Complex64::new(0.0, e);
                (kern.psi_unchecked(Complex64::new(xi, 0.0) + d) + 2.0 / d).re
            })
            .collect();
        let (limit, residual) = neville_at_zero(&eps, &vals);
        if !limit.is_finite() || residual > 1e-6 * (1.0 + limit.abs()) {
            return Err(Error::Numeric(format!(
                "limit extraction did not converge (residual {residual:e})"
            )));
        }
        Ok((limit, residual))
    }
}

/// Polynomial extrapolation to zero; returns the final estimate and the size of the last
/// correction.
pub(crate) fn neville_at_zero(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len();
    let mut p = y.to_vec();
    let mut last = f64::INFINITY;
    for m in 1..n {
        for i in 0..n - m {
            let prev = p[i];
            p[i] = (x[i + m] * p[i] - x[i] * p[i + 1]) / (x[i + m] - x[i]);
            if i == 0 {
                last = (p[0] - prev).abs();
            }
        }
    }
    (p[0], last)
}

/// `Psi(., xi)` for a fixed engine and driving point.
#[derive(Debug, Clone)]
pub struct PsiKernel<'a> {
    field: &'a ChordalField,
    xi: f64,
    coefs: DVector<f64>,
    lambda: Vec<f64>,
    k: f64,
}

impl<'a> PsiKernel<'a> {
    pub fn field(&self) -> &'a ChordalField {
        self.field
    }
}

impl PsiKernel<'_> {
    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// Series coefficients of the regular part `-i (Psi + 2 / (z - xi))`.
    pub fn coefs(&self) -> &DVector<f64> {
        &self.coefs
    }

    /// `Im Psi` on each slit, read off from the period condition.
    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    /// `Psi(z) + 2 / (z - xi)`, analytic near `xi`.
    pub fn regular_part(&self, z: Complex64) -> Complex64 {
        I * self.field.eval_analytic(&self.coefs, z)
    }

    /// `Psi(z)` without domain checks; also valid on the boundary away from `xi`.
    #[inline]
    pub fn psi_unchecked(&self, z: Complex64) -> Complex64 {
        -2.0 / (z - self.xi) + self.regular_part(z)
    }

    pub fn psi(&self, z: Complex64) -> Result<Complex64> {
        let d = z - self.xi;
        if d.norm() == 0.0 {
            return Err(Error::Pole(z));
        }
        Ok(self.psi_unchecked(z))
    }

    pub fn psi0_unchecked(&self, z: Complex64) -> Complex64 {
        self.psi_unchecked(z) - self.k
    }
}

fn choose_modes(moduli: &ChordalModuli, config: &FieldConfig) -> usize {
    let tol = config.series_tol();
    let mut rho_min = f64::INFINITY;
    for (j, s) in moduli.slits.iter().enumerate() {
        let h = s.half_length();
        let c = s.center();
        // worst-case boundary data: the driving point right below the slit
        rho_min = rho_min.min(joukowski::inverse(Complex64::new(0.0, -s.y / h)).0.norm());
        for (l, o) in moduli.slits.iter().enumerate() {
            if l == j {
                continue;
            }
            for i in 0..=16 {
                let p = Complex64::new(o.x + (o.xp - o.x) * i as f64 / 16.0, o.y);
                rho_min = rho_min.min(joukowski::inverse((p - c) / h).0.norm());
            }
        }
    }
    modes_for(rho_min, tol, 12, config.max_modes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m1() -> ChordalModuli {
        ChordalModuli::new(vec![Slit::new(1.0, -1.0, 1.0)])
    }

    fn m2() -> ChordalModuli {
        ChordalModuli::new(vec![Slit::new(1.0, -1.0, 1.0), Slit::new(0.6, 1.8, 2.6)])
    }

    #[test]
    fn half_plane_closed_forms() {
        let f = ChordalField::new(&ChordalModuli::half_plane()).unwrap();
        let z = Complex64::new(1.0, 1.0);
        assert!((f.psi(z, 0.0).unwrap() - Complex64::new(-1.0, 1.0)).norm() < 1e-15);
        assert!(
            (f.green(Complex64::new(0.0, 1.0), Complex64::new(0.0, 2.0))
                .unwrap()
                - 3f64.ln())
            .abs()
                < 1e-15
        );
        assert_eq!(f.k_const(0.7).unwrap(), 0.0);
        assert_eq!(f.harmonic_measure(0, z).unwrap(), 1.0);
        assert_eq!(f.period_matrix().nrows(), 0);
    }

    #[test]
    fn boundary_values_are_met_between_nodes() {
        let f = ChordalField::new(&m2()).unwrap();
        for j in 0..2 {
            let s = m2().slits[j];
            for i in 0..=20 {
                let z = Complex64::new(s.x + (s.xp - s.x) * i as f64 / 20.0, s.y);
                for k in 0..2 {
                    let v = f.eval_harmonic(&f.omega[k], z);
                    let want = if k == j { 1.0 } else { 0.0 };
                    assert!((v - want).abs() < 1e-7, "slit {j} fn {k}: {v}");
                }
            }
        }
    }

    #[test]
    fn near_slit_measure_is_close_to_one() {
        let f = ChordalField::new(&m1()).unwrap();
        assert!(f.harmonic_measure(0, Complex64::new(0.5, 0.98)).unwrap() >= 0.9);
    }

    #[test]
    fn measures_sum_to_one() {
        let f = ChordalField::new(&m2()).unwrap();
        for z in [
            Complex64::new(0.2, 0.3),
            Complex64::new(-3.0, 2.0),
            Complex64::new(2.2, 1.5),
        ] {
            let s: f64 = (0..3).map(|j| f.harmonic_measure(j, z).unwrap()).sum();
            assert!((s - 1.0).abs() < 1e-12);
            for j in 0..3 {
                let w = f.harmonic_measure(j, z).unwrap();
                assert!(w > 0.0 && w < 1.0);
            }
        }
    }

    #[test]
    fn period_matrix_is_spd() {
        let f = ChordalField::new(&m2()).unwrap();
        let a = f.period_matrix();
        assert!((a[(0, 1)] - a[(1, 0)]).abs() < 1e-6, "{a}");
        let eig = a.clone().symmetric_eigen();
        assert!(eig.eigenvalues.iter().all(|&e| e > 0.0));
    }

    #[test]
    fn green_is_symmetric_and_vanishes_on_slits() {
        let f = ChordalField::new(&m2()).unwrap();
        let a = Complex64::new(0.3, 2.0);
        let b = Complex64::new(2.2, 0.3);
        let gab = f.green(a, b).unwrap();
        let gba = f.green(b, a).unwrap();
        assert!(gab > 0.0);
        assert!((gab - gba).abs() < 1e-8, "{gab} vs {gba}");
        let near = f.green(Complex64::new(0.0, 1.0 + 1e-7), b).unwrap();
        assert!(near.abs() < 1e-5);
    }

    #[test]
    fn psi_boundary_behaviour() {
        let f = ChordalField::new(&m2()).unwrap();
        let kern = f.kernel(0.3).unwrap();
        // real on the real axis
        for x in [-4.0, -0.5, 1.0, 2.2, 7.0] {
            assert!(kern.psi_unchecked(Complex64::new(x, 0.0)).im.abs() < 1e-9);
        }
        // constant imaginary part on each slit
        for (j, s) in m2().slits.iter().enumerate() {
            for i in 0..=10 {
                let z = Complex64::new(s.x + (s.xp - s.x) * i as f64 / 10.0, s.y);
                let v = kern.psi_unchecked(z).im;
                assert!((v - kern.lambda()[j]).abs() < 1e-8, "slit {j}: {v}");
            }
        }
        // decay at infinity
        let r = 1e3;
        for th in [0.3, 1.5, 2.8] {
            let v = kern.psi_unchecked(Complex64::from_polar(r, th));
            assert!(v.norm() * r < 2.5);
        }
    }

    #[test]
    fn two_routes_to_slit_levels_agree() {
        let f = ChordalField::new(&m2()).unwrap();
        for xi in [-2.0, 0.0, 1.4, 3.0] {
            let kern = f.kernel(xi).unwrap();
            let b = f.slit_levels_from_periods(xi).unwrap();
            for (a, b) in kern.lambda().iter().zip(&b) {
                assert!((a - b).abs() < 1e-8, "xi={xi}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn k_agrees_with_extrapolation() {
        let f = ChordalField::new(&m2()).unwrap();
        for xi in [-1.0, 0.5, 2.0] {
            let k = f.k_const(xi).unwrap();
            let (lim, _) = f.k_by_extrapolation(xi).unwrap();
            assert!((k - lim).abs() < 1e-7, "{k} vs {lim}");
        }
    }

    #[test]
    fn psi0_differs_by_a_real_constant() {
        let f = ChordalField::new(&m1()).unwrap();
        let zs = [
            Complex64::new(1.5, 1.0),
            Complex64::new(-2.0, 3.0),
            Complex64::new(0.0, 5.0),
        ];
        let d: Vec<Complex64> = zs
            .iter()
            .map(|&z| f.psi0(z, 0.4).unwrap() - f.psi(z, 0.4).unwrap())
            .collect();
        for v in &d {
            assert!(v.im.abs() < 1e-12);
            assert!((v.re - d[0].re).abs() < 1e-8);
        }
    }

    #[test]
    fn invalid_moduli_rejected() {
        let bad = ChordalModuli::new(vec![Slit::new(-1.0, 0.0, 1.0)]);
        assert!(matches!(
            ChordalField::new(&bad),
            Err(Error::InvalidModuli(_))
        ));
    }

    #[test]
    fn evaluation_errors() {
        let f = ChordalField::new(&m1()).unwrap();
        assert!(matches!(
            f.psi(Complex64::new(0.0, -1.0), 0.0),
            Err(Error::NotInterior(_))
        ));
        assert!(matches!(
            f.green(Complex64::new(0.0, 2.0), Complex64::new(0.0, 2.0)),
            Err(Error::Pole(_))
        ));
        assert!(f.harmonic_measure(0, Complex64::new(0.2, 1.0)).is_err());
    }
}
