use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::joukowski::{self, chebyshev_angles};
use super::{modes_for, FieldConfig};
use crate::domain::{Arc, BilateralModuli};
use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Field engine for a bilateral standard domain `{Q < |z| < 1}` minus circular arcs.
///
/// Harmonic functions are represented as the real part of
///
/// ```text
/// a + b log z + sum_n c_n z^n + d_n (Q/z)^n + sum_j sum_k e_jk Phi_k(t_j(z))
/// ```
///
/// where `t_j` sends arc `j` onto `[-1, 1]` through a Cayley transform. The circle terms are
/// collocated at equispaced points, the arc terms at Chebyshev nodes.
///
/// Boundary components are indexed `0..a` for the arcs, `a` for the inner circle and
/// `a + 1` for the unit circle.
#[derive(Debug, Clone)]
pub struct BilateralField {
    moduli: BilateralModuli,
    config: FieldConfig,
    q: f64,
    fourier: usize,
    modes: usize,
    arcs: Vec<ArcMap>,
    angles: Vec<f64>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    /// Harmonic measures of the arcs followed by the inner circle.
    omega: Vec<DVector<f64>>,
    period_lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

#[derive(Debug, Clone, Copy)]
struct ArcMap {
    r: f64,
    rot: Complex64,
    tan_half: f64,
}

impl ArcMap {
    fn new(a: &Arc) -> Self {
        Self {
            r: a.radius(),
            rot: Complex64::from_polar(1.0, -a.mid_angle()),
            tan_half: (0.5 * a.half_angle()).tan(),
        }
    }

    fn u(&self, z: Complex64) -> Complex64 {
        z * self.rot / self.r
    }

    fn t(&self, z: Complex64) -> Complex64 {
        let u = self.u(z);
        I * (1.0 - u) / ((1.0 + u) * self.tan_half)
    }

    fn point(&self, t: f64) -> Complex64 {
        let phi = 2.0 * (t * self.tan_half).atan();
        Complex64::from_polar(self.r, phi) / self.rot
    }
}

impl BilateralField {
    pub fn new(moduli: &BilateralModuli) -> Result<Self> {
        Self::with_config(moduli, FieldConfig::default())
    }

    pub fn with_config(moduli: &BilateralModuli, config: FieldConfig) -> Result<Self> {
        let violations = moduli.validate();
        if !violations.is_empty() {
            let msg: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            return Err(Error::InvalidModuli(msg.join("; ")));
        }
        let q = moduli.inner_radius();
        let arcs: Vec<ArcMap> = moduli.arcs.iter().map(ArcMap::new).collect();
        let tol = config.series_tol();

        let mut rho_f = 1.0 / q;
        for a in &arcs {
            rho_f = rho_f.min(1.0 / a.r).min(a.r / q);
        }
        let fourier = modes_for(rho_f, tol, 8, config.max_fourier);
        let modes = if arcs.is_empty() {
            0
        } else {
            modes_for(arc_decay(&arcs, q), tol, 12, config.max_modes)
        };

        let mut field = Self {
            moduli: moduli.clone(),
            config,
            q,
            fourier,
            modes,
            arcs,
            angles: chebyshev_angles(modes),
            lu: DMatrix::<f64>::identity(1, 1).lu(),
            omega: Vec::new(),
            period_lu: DMatrix::<f64>::identity(1, 1).lu(),
        };
        let pts = field.collocation();
        let size = field.size();
        debug_assert_eq!(pts.len(), size);
        let mut a = DMatrix::<f64>::zeros(size, size);
        let mut row = vec![0.0; size];
        for (r, p) in pts.iter().enumerate() {
            field.real_basis(p, &mut row);
            for (c, v) in row.iter().enumerate() {
                a[(r, c)] = *v;
            }
        }
        let lu = a.lu();
        if !lu.is_invertible() {
            return Err(Error::Numeric("singular collocation matrix".into()));
        }
        field.lu = lu;

        let na = field.arcs.len();
        for j in 0..=na {
            let c = field.solve_dirichlet_on(|b, _| if b == j { 1.0 } else { 0.0 })?;
            field.omega.push(c);
        }
        let pm = DMatrix::from_fn(na + 1, na + 1, |r, j| field.omega[j][field.period_index(r)]);
        let plu = pm.lu();
        if !plu.is_invertible() {
            return Err(Error::Numeric("period system is singular".into()));
        }
        field.period_lu = plu;
        Ok(field)
    }

    pub fn moduli(&self) -> &BilateralModuli {
        &self.moduli
    }

    pub fn config(&self) -> &FieldConfig {
        &self.config
    }

    /// Fourier degree on the circles.
    pub fn fourier_degree(&self) -> usize {
        self.fourier
    }

    /// Chebyshev modes per arc.
    pub fn modes(&self) -> usize {
        self.modes
    }

    fn size(&self) -> usize {
        4 * self.fourier + 2 + self.arcs.len() * self.modes
    }

    fn arc_offset(&self, j: usize) -> usize {
        4 * self.fourier + 2 + j * self.modes
    }

    /// Index of the coefficient carrying the period of component `r` (arcs, then inner circle).
    fn period_index(&self, r: usize) -> usize {
        if r < self.arcs.len() {
            self.arc_offset(r)
        } else {
            1
        }
    }

    fn collocation(&self) -> Vec<Node> {
        let m = 2 * self.fourier + 1;
        let mut out = Vec::with_capacity(self.size());
        for i in 0..m {
            let th = 2.0 * PI * i as f64 / m as f64;
            out.push(Node::Circle {
                z: Complex64::from_polar(1.0, th),
                component: self.arcs.len() + 1,
            });
        }
        for i in 0..m {
            let th = 2.0 * PI * (i as f64 + 0.5) / m as f64;
            out.push(Node::Circle {
                z: Complex64::from_polar(self.q, th),
                component: self.arcs.len(),
            });
        }
        for (j, a) in self.arcs.iter().enumerate() {
            for &th in &self.angles {
                out.push(Node::Arc {
                    z: a.point(th.cos()),
                    arc: j,
                    theta: th,
                });
            }
        }
        out
    }

    fn real_basis(&self, node: &Node, out: &mut [f64]) {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.size()];
        self.analytic_basis(node.z(), &mut buf);
        for (o, v) in out.iter_mut().zip(&buf) {
            *o = v.re;
        }
        if let Node::Arc { arc, theta, z } = *node {
            let off = self.arc_offset(arc);
            let mut own = vec![0.0; self.modes];
            joukowski::on_cut_modes(theta, &mut own);
            own[0] += (1.0 + self.arcs[arc].u(z)).norm().ln();
            out[off..off + self.modes].copy_from_slice(&own);
        }
    }

    /// Analytic basis at `z`: `1, log z, z^n, i z^n, (Q/z)^n, i (Q/z)^n, arc modes`.
    fn analytic_basis(&self, z: Complex64, out: &mut [Complex64]) {
        let nf = self.fourier;
        out[0] = Complex64::new(1.0, 0.0);
        out[1] = z.ln();
        let qz = self.q / z;
        let (mut p, mut pq) = (z, qz);
        for n in 0..nf {
            out[2 + 4 * n] = p;
            out[3 + 4 * n] = I * p;
            out[4 + 4 * n] = pq;
            out[5 + 4 * n] = I * pq;
            p *= z;
            pq *= qz;
        }
        for (j, a) in self.arcs.iter().enumerate() {
            let off = self.arc_offset(j);
            let block = &mut out[off..off + self.modes];
            joukowski::analytic_modes(a.t(z), block);
            // regularize the Cayley pole at u = -1
            block[0] += (1.0 + a.u(z)).ln();
        }
    }

    fn solve_dirichlet_on<F: Fn(usize, Complex64) -> f64>(&self, data: F) -> Result<DVector<f64>> {
        let pts = self.collocation();
        let rhs = DVector::from_iterator(pts.len(), pts.iter().map(|p| data(p.component(), p.z())));
        self.lu
            .solve(&rhs)
            .ok_or_else(|| Error::Numeric("collocation solve failed".into()))
    }

    /// Coefficients of the harmonic function with boundary values `data(z)`.
    pub fn solve_dirichlet<F: Fn(Complex64) -> f64>(&self, data: F) -> Result<DVector<f64>> {
        self.solve_dirichlet_on(|_, z| data(z))
    }

    pub fn eval_analytic(&self, coefs: &DVector<f64>, z: Complex64) -> Complex64 {
        let mut b = vec![Complex64::new(0.0, 0.0); self.size()];
        self.analytic_basis(z, &mut b);
        b.iter().zip(coefs.iter()).map(|(v, c)| v * *c).sum()
    }

    pub fn eval_harmonic(&self, coefs: &DVector<f64>, z: Complex64) -> f64 {
        self.eval_analytic(coefs, z).re
    }

    fn check_interior(&self, z: Complex64) -> Result<()> {
        let r = z.norm();
        if !(r > self.q && r < 1.0) || self.moduli.distance_to_boundary(z) <= 1e-14 {
            return Err(Error::NotInterior(z));
        }
        Ok(())
    }

    /// Harmonic measure of boundary component `j` at `z`.
    pub fn harmonic_measure(&self, j: usize, z: Complex64) -> Result<f64> {
        let na = self.arcs.len();
        if j > na + 1 {
            return Err(Error::Precondition(format!(
                "boundary index {j} out of range"
            )));
        }
        self.check_interior(z)?;
        if j == na + 1 {
            let s: f64 = self.omega.iter().map(|c| self.eval_harmonic(c, z)).sum();
            Ok(1.0 - s)
        } else {
            Ok(self.eval_harmonic(&self.omega[j], z))
        }
    }

    /// Precomputes `Psi(., zeta)` for the boundary point `zeta = e^{i xi}`.
    pub fn kernel(&self, xi: f64) -> Result<BilateralKernel<'_>> {
        if !xi.is_finite() {
            return Err(Error::Precondition(format!(
                "driving angle {xi} is not finite"
            )));
        }
        let zeta = Complex64::from_polar(1.0, xi);
        let na = self.arcs.len();
        let v = self.solve_dirichlet_on(|comp, z| {
            if comp == na + 1 {
                0.0
            } else {
                schwarz(zeta, z).im
            }
        })?;
        let b = DVector::from_fn(na + 1, |r, _| v[self.period_index(r)]);
        let lambda = self
            .period_lu
            .solve(&b)
            .ok_or_else(|| Error::Numeric("period system solve failed".into()))?;
        let mut coefs = -v;
        for (j, l) in lambda.iter().enumerate() {
            coefs.axpy(*l, &self.omega[j], 1.0);
        }
        for r in 0..=na {
            coefs[self.period_index(r)] = 0.0;
        }
        Ok(BilateralKernel {
            field: self,
            zeta,
            coefs,
            lambda: lambda.iter().copied().collect(),
        })
    }

    /// `Psi` assembled from kernel coefficients produced by [`BilateralField::kernel`].
    pub fn psi_from(&self, zeta: Complex64, coefs: &DVector<f64>, z: Complex64) -> Complex64 {
        schwarz(zeta, z) + I * self.eval_analytic(coefs, z)
    }

    /// Loewner vector field of the annulus, up to an additive real constant.
    pub fn psi(&self, z: Complex64, xi: f64) -> Result<Complex64> {
        self.check_interior(z)?;
        self.kernel(xi)?.psi(z)
    }
}

/// `-i (zeta + z) / (zeta - z)`.
#[inline]
fn schwarz(zeta: Complex64, z: Complex64) -> Complex64 {
    -I * (zeta + z) / (zeta - z)
}

#[derive(Debug, Clone, Copy)]
enum Node {
    Circle {
        z: Complex64,
        component: usize,
    },
    Arc {
        z: Complex64,
        arc: usize,
        theta: f64,
    },
}

impl Node {
    fn z(&self) -> Complex64 {
        match *self {
            Node::Circle { z, .. } | Node::Arc { z, .. } => z,
        }
    }

    fn component(&self) -> usize {
        match *self {
            Node::Circle { component, .. } => component,
            Node::Arc { arc, .. } => arc,
        }
    }
}

fn arc_decay(arcs: &[ArcMap], q: f64) -> f64 {
    let mut rho = f64::INFINITY;
    for (j, a) in arcs.iter().enumerate() {
        let mut probe = |z: Complex64| {
            rho = rho.min(joukowski::inverse(a.t(z)).0.norm());
        };
        for i in 0..128 {
            let e = Complex64::from_polar(1.0, 2.0 * PI * i as f64 / 128.0);
            probe(e);
            probe(e * q);
        }
        for (l, o) in arcs.iter().enumerate() {
            if l != j {
                for i in 0..=16 {
                    probe(o.point(-1.0 + i as f64 / 8.0));
                }
            }
        }
    }
    rho
}

/// `Psi(., zeta)` for a fixed bilateral engine.
#[derive(Debug, Clone)]
pub struct BilateralKernel<'a> {
    field: &'a BilateralField,
    zeta: Complex64,
    coefs: DVector<f64>,
    lambda: Vec<f64>,
}

impl BilateralKernel<'_> {
    pub fn zeta(&self) -> Complex64 {
        self.zeta
    }

    /// `Im Psi` on each arc, then on the inner circle; zero on the unit circle.
    pub fn levels(&self) -> &[f64] {
        &self.lambda
    }

    pub fn psi_unchecked(&self, z: Complex64) -> Complex64 {
        self.field.psi_from(self.zeta, &self.coefs, z)
    }

    /// Series coefficients of the regular part `-i (Psi - S)`.
    pub fn coefs(&self) -> &DVector<f64> {
        &self.coefs
    }

    pub fn psi(&self, z: Complex64) -> Result<Complex64> {
        if (z - self.zeta).norm() == 0.0 {
            return Err(Error::Pole(z));
        }
        Ok(self.psi_unchecked(z))
    }

    /// Right-hand side `1 + i [Psi(z) - Psi(Q)]` of the flow of `ln g`.
    pub fn log_velocity(&self, z: Complex64) -> Complex64 {
        let q = Complex64::new(self.field.q, 0.0);
        1.0 + I * (self.psi_unchecked(z) - self.psi_unchecked(q))
    }
}
