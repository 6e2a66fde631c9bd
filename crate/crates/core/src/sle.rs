//! The driving diffusion `d xi = sqrt(kappa) dB + A(xi, M) dt` coupled with the moduli.
//!
//! The sampler works in the pole-normalized gauge, where the flow is `dg/dt = -Psi0(g, xi)`
//! and the moduli move with `Psi0` in place of `Psi`. Drifts stated for the original field
//! (the locality ansatz) are translated on the way in.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::domain::{ChordalModuli, DrivenPath, Moduli, TraceSample};
use crate::error::{Error, Result};
use crate::field::{cauchy_derivative, ChordalField, FieldConfig, PsiKernel};
use crate::loewner::{trace_forward, FlowConfig};
use crate::moduli_flow::chordal_velocity_shifted;
use crate::rng;

/// A user drift `A(xi, M)`; must be homogeneous of degree -1.
#[derive(Clone)]
pub struct CustomDrift(pub Arc<dyn Fn(f64, &ChordalModuli) -> f64 + Send + Sync>);

impl fmt::Debug for CustomDrift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CustomDrift(..)")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DriftSpec {
    /// `A = 0` in the pole-normalized gauge.
    ZeroGauge,
    /// `d xi = -k(xi) dt + sqrt(kappa) dB` for the original field.
    Locality,
    /// `sum_j rho_j / (xi - Z_j)` with boundary points `Z_j` moving by `dZ = 2 / (Z - xi)`.
    KappaRho { points: Vec<f64>, rho: Vec<f64> },
    /// `Re [d_z^k d_w^l G / d_z^m d_w^n G]` at `z = xi` and the interior anchor `w`.
    GreenRatio { orders: [u32; 4], anchor: Complex64 },
    #[serde(skip)]
    Custom(CustomDrift),
}

/// A drift that passed the homogeneity probe.
#[derive(Debug, Clone)]
pub struct Drift {
    spec: DriftSpec,
}

/// Number of probes run at registration.
pub const REGISTRATION_PROBES: usize = 8;
/// Tolerance of the homogeneity probe, relative to `1 + |A|`.
pub const HOMOGENEITY_TOL: f64 = 1e-5;

impl Drift {
    /// Validates `spec` and checks `c A(c xi, c M) = A(xi, M)` on random probes around `m0`.
    pub fn register(spec: DriftSpec, m0: &ChordalModuli) -> Result<Self> {
        match &spec {
            DriftSpec::KappaRho { points, rho } => {
                if points.len() != rho.len() {
                    return Err(Error::Precondition(
                        "points and rho differ in length".into(),
                    ));
                }
                if !m0.slits.is_empty() {
                    return Err(Error::Precondition(
                        "SLE(kappa, rho) needs the half plane".into(),
                    ));
                }
            }
            DriftSpec::GreenRatio { orders, anchor } => {
                let [k, l, m, n] = *orders;
                if k + l != m + n + 1 {
                    return Err(Error::Precondition(format!(
                        "orders ({k},{l},{m},{n}) must satisfy k + l = m + n + 1"
                    )));
                }
                if l > 2 || n > 2 {
                    return Err(Error::Precondition(
                        "anchor derivatives above order 2".into(),
                    ));
                }
                if !(anchor.im > 0.0) {
                    return Err(Error::Precondition(
                        "anchor must lie in the upper half plane".into(),
                    ));
                }
            }
            _ => {}
        }
        let drift = Self { spec };
        for p in 0..REGISTRATION_PROBES {
            let r = drift.probe(m0, 0xd1f7 + p as u64)?;
            if r > HOMOGENEITY_TOL {
                return Err(Error::NotHomogeneous(r));
            }
        }
        Ok(drift)
    }

    pub fn spec(&self) -> &DriftSpec {
        &self.spec
    }

    /// Initial marked points: `Z_j` for SLE(kappa, rho), the anchor for Green ratios.
    pub fn initial_marks(&self) -> Vec<Complex64> {
        match &self.spec {
            DriftSpec::KappaRho { points, .. } => {
                points.iter().map(|&x| Complex64::new(x, 0.0)).collect()
            }
            DriftSpec::GreenRatio { anchor, .. } => vec![*anchor],
            _ => Vec::new(),
        }
    }

    /// The drift as stated (original gauge for the locality ansatz).
    pub fn value(&self, m: &ChordalModuli, xi: f64, marks: &[Complex64]) -> Result<f64> {
        match &self.spec {
            DriftSpec::ZeroGauge => Ok(0.0),
            DriftSpec::Locality => drift_locality(m, xi),
            DriftSpec::KappaRho { rho, .. } => {
                let z: Vec<f64> = marks.iter().map(|c| c.re).collect();
                drift_kappa_rho(&z, rho, xi)
            }
            DriftSpec::GreenRatio { orders, .. } => {
                let field = ChordalField::new(m)?;
                green_ratio(&field, *orders, xi, marks[0])
            }
            DriftSpec::Custom(f) => Ok((f.0)(xi, m)),
        }
    }

    /// The drift in the pole-normalized gauge used by the sampler.
    pub fn gauge_value(
        &self,
        field: &ChordalField,
        kern: &PsiKernel<'_>,
        marks: &[Complex64],
    ) -> Result<f64> {
        let xi = kern.xi();
        match &self.spec {
            // -k in the original gauge is exactly cancelled by the gauge shift +k
            DriftSpec::Locality => Ok(0.0),
            DriftSpec::GreenRatio { orders, .. } => green_ratio(field, *orders, xi, marks[0]),
            _ => self.value(field.moduli(), xi, marks),
        }
    }

    /// `|c A(c xi, c M, c Z) - A(xi, M, Z)| / (1 + |A|)` for one random probe.
    pub fn probe(&self, m0: &ChordalModuli, seed: u64) -> Result<f64> {
        let c = 0.5 + 3.5 * rng::uniform(seed, 0);
        let (lo, hi) = m0.slits.iter().fold((-1.0f64, 1.0f64), |(a, b), s| {
            (a.min(s.x - 1.0), b.max(s.xp + 1.0))
        });
        let marks = self.initial_marks();
        let mut xi = lo + (hi - lo) * rng::uniform(seed, 1);
        // keep clear of boundary marks
        for _ in 0..16 {
            if marks.iter().all(|z| (z.re - xi).abs() > 0.05 || z.im > 0.0) {
                break;
            }
            xi += 0.1;
        }
        self.homogeneity_residual(m0, xi, &marks, c)
    }

    pub fn homogeneity_residual(
        &self,
        m: &ChordalModuli,
        xi: f64,
        marks: &[Complex64],
        c: f64,
    ) -> Result<f64> {
        let a = self.value(m, xi, marks)?;
        let scaled: Vec<Complex64> = marks.iter().map(|z| z * c).collect();
        let b = c * self.value(&m.scale(c)?, c * xi, &scaled)?;
        Ok((a - b).abs() / (1.0 + a.abs()))
    }
}

/// The locality drift `-k(xi)`, for use with the original field.
pub fn drift_locality(m: &ChordalModuli, xi: f64) -> Result<f64> {
    if m.slits.is_empty() {
        return Ok(0.0);
    }
    Ok(-ChordalField::new(m)?.k_const(xi)?)
}

/// `sum_j rho_j / (xi - Z_j)`.
pub fn drift_kappa_rho(points: &[f64], rho: &[f64], xi: f64) -> Result<f64> {
    if points.len() != rho.len() {
        return Err(Error::Precondition(
            "points and rho differ in length".into(),
        ));
    }
    let mut a = 0.0;
    for (z, r) in points.iter().zip(rho) {
        if (xi - z).abs() < 1e-12 * (1.0 + xi.abs()) {
            return Err(Error::Pole(Complex64::new(*z, 0.0)));
        }
        a += r / (xi - z);
    }
    Ok(a)
}

/// `Re [d_z^k d_w^l G(z, w) / d_z^m d_w^n G(z, w)]` at `z = xi`, with `d_z` acting on the
/// analytic completion in `z` and `d_w` the Wirtinger derivative in the anchor.
pub fn drift_green_ratio(
    orders: [u32; 4],
    m: &ChordalModuli,
    xi: f64,
    anchor: Complex64,
) -> Result<f64> {
    let [k, l, mm, n] = orders;
    if k + l != mm + n + 1 {
        return Err(Error::Precondition(format!(
            "orders ({k},{l},{mm},{n}) must satisfy k + l = m + n + 1"
        )));
    }
    green_ratio(&ChordalField::new(m)?, orders, xi, anchor)
}

fn green_ratio(field: &ChordalField, orders: [u32; 4], xi: f64, w: Complex64) -> Result<f64> {
    let [k, l, m, n] = orders;
    if k + l != m + n + 1 {
        return Err(Error::Precondition(format!(
            "orders ({k},{l},{m},{n}) must satisfy k + l = m + n + 1"
        )));
    }
    if !(w.im > 0.0) {
        return Err(Error::NotInterior(w));
    }
    let num = mixed_green_derivative(field, xi, w, k, l)?;
    let den = mixed_green_derivative(field, xi, w, m, n)?;
    if den.norm() < 1e-10 {
        return Err(Error::SingularDrift(den.norm()));
    }
    Ok((num / den).re)
}

fn mixed_green_derivative(
    field: &ChordalField,
    xi: f64,
    w: Complex64,
    k: u32,
    l: u32,
) -> Result<Complex64> {
    let mut reach = w.im;
    if let Some(y) = field.moduli().min_height() {
        reach = reach.min(y);
    }
    let z = Complex64::new(xi, 0.0);
    reach = reach.min((z - w).norm());
    let radius = 0.4 * reach;
    let dz = |w: Complex64| -> Result<Complex64> {
        if k == 0 {
            // G vanishes on the real axis
            return Ok(Complex64::new(0.0, 0.0));
        }
        let corr = field.green_correction(w)?;
        Ok(cauchy_derivative(
            |u| field.green_analytic(&corr, u, w),
            z,
            radius,
            k as usize,
        ))
    };
    wirtinger(&dz, w, l, 0.005 * reach)
}

/// `(d/da - i d/db)^l / 2^l` by nested fourth-order central differences.
fn wirtinger<F: Fn(Complex64) -> Result<Complex64>>(
    f: &F,
    w: Complex64,
    l: u32,
    h: f64,
) -> Result<Complex64> {
    if l == 0 {
        return f(w);
    }
    let inner = |u: Complex64| wirtinger(f, u, l - 1, h);
    let stencil = |dir: Complex64| -> Result<Complex64> {
        let p2 = inner(w + 2.0 * h * dir)?;
        let p1 = inner(w + h * dir)?;
        let m1 = inner(w - h * dir)?;
        let m2 = inner(w - 2.0 * h * dir)?;
        Ok((-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * h))
    };
    let da = stencil(Complex64::new(1.0, 0.0))?;
    let db = stencil(Complex64::new(0.0, 1.0))?;
    Ok(0.5 * (da - Complex64::new(0.0, 1.0) * db))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdeConfig {
    pub kappa: f64,
    pub dt: f64,
    pub seed: u64,
    pub horizon: f64,
    #[serde(default)]
    pub xi0: f64,
    /// RK4 substeps of the moduli per driver step.
    #[serde(default = "default_substeps")]
    pub substeps: usize,
    #[serde(default = "default_collapse")]
    pub collapse: f64,
    #[serde(default)]
    pub field: FieldConfig,
    /// Base grid of the Brownian increments. When set, each driver increment sums
    /// `dt / noise_dt` base normals, so runs at different `dt` share one Brownian path.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_dt: Option<f64>,
}

fn default_substeps() -> usize {
    4
}

fn default_collapse() -> f64 {
    1e-4
}

impl SdeConfig {
    pub fn new(kappa: f64, dt: f64, seed: u64, horizon: f64) -> Self {
        Self {
            kappa,
            dt,
            seed,
            horizon,
            xi0: 0.0,
            substeps: default_substeps(),
            collapse: default_collapse(),
            field: FieldConfig::default(),
            noise_dt: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa >= 0.0) || !self.kappa.is_finite() {
            return Err(Error::Precondition(format!(
                "kappa must be nonnegative, got {}",
                self.kappa
            )));
        }
        if !(self.dt > 0.0) || !(self.horizon > 0.0) {
            return Err(Error::Precondition(
                "dt and horizon must be positive".into(),
            ));
        }
        if self.substeps == 0 {
            return Err(Error::Precondition("substeps must be positive".into()));
        }
        if let Some(b) = self.noise_dt {
            let r = self.dt / b;
            let n = self.horizon / self.dt;
            if !(b > 0.0) || (r - r.round()).abs() > 1e-9 * r || (n - n.round()).abs() > 1e-9 * n {
                return Err(Error::Precondition(
                    "noise_dt must divide dt, and dt must divide the horizon".into(),
                ));
            }
        }
        Ok(())
    }

    /// Standard normal driving step `i`.
    fn normal(&self, i: usize) -> f64 {
        match self.noise_dt {
            None => rng::normal(self.seed, i as u64),
            Some(b) => {
                let r = (self.dt / b).round() as u64;
                let sum: f64 = (0..r)
                    .map(|j| rng::normal(self.seed, i as u64 * r + j))
                    .sum();
                sum / (r as f64).sqrt()
            }
        }
    }
}

/// A sampled driver in the pole-normalized gauge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    pub path: DrivenPath,
    /// `k(xi)` at every snapshot.
    pub k: Vec<f64>,
    /// Marked points at every snapshot.
    pub marks: Vec<Vec<Complex64>>,
}

impl SamplePath {
    /// Driver value at `t`, or at the stop time if the path collapsed earlier.
    pub fn xi_at(&self, t: f64) -> f64 {
        let p = &self.path;
        let i = p.index_at(t);
        if i + 1 >= p.len() {
            return p.xi[i];
        }
        let s = (t - p.times[i]) / (p.times[i + 1] - p.times[i]);
        p.xi[i] + s * (p.xi[i + 1] - p.xi[i])
    }

    /// The same path in the gauge of the original field: `xi - int k`, slits shifted alike.
    pub fn to_field_gauge(&self) -> DrivenPath {
        let p = &self.path;
        let mut shift = 0.0;
        let mut out = p.clone();
        for i in 0..p.len() {
            if i > 0 {
                shift += 0.5 * (self.k[i] + self.k[i - 1]) * (p.times[i] - p.times[i - 1]);
            }
            out.xi[i] = p.xi[i] - shift;
            if let Moduli::Chordal(m) = &p.moduli[i] {
                out.moduli[i] = Moduli::Chordal(m.translate(-shift));
            }
        }
        out
    }
}

/// Euler-Maruyama sample of `(xi, M)` with RK4-substepped moduli and marked points.
pub fn sample_path(m0: &ChordalModuli, drift: &Drift, cfg: &SdeConfig) -> Result<SamplePath> {
    cfg.validate()?;
    let violations = m0.validate();
    if !violations.is_empty() {
        let msg: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(Error::InvalidModuli(msg.join("; ")));
    }
    let steps = ((cfg.horizon / cfg.dt) - 1e-9).ceil().max(1.0) as usize;
    let sk = cfg.kappa.sqrt();
    let mut m = m0.clone();
    let mut xi = cfg.xi0;
    let mut marks = drift.initial_marks();
    let mut out = SamplePath {
        path: DrivenPath {
            times: vec![0.0],
            xi: vec![xi],
            moduli: vec![Moduli::Chordal(m.clone())],
            stop_time: None,
        },
        k: Vec::new(),
        marks: vec![marks.clone()],
    };
    let boundary_marks = matches!(drift.spec, DriftSpec::KappaRho { .. });
    for i in 0..steps {
        let t = i as f64 * cfg.dt;
        let h = (cfg.horizon - t).min(cfg.dt);
        let field = ChordalField::with_config(&m, cfg.field)?;
        let kern = field.kernel(xi)?;
        out.k.push(kern.k());
        let a = match drift.gauge_value(&field, &kern, &marks) {
            Ok(a) => a,
            Err(Error::Pole(_)) => {
                out.path.stop_time = Some(t);
                return Ok(out);
            }
            Err(e) => return Err(e),
        };
        let xi1 = xi + a * h + sk * h.sqrt() * cfg.normal(i);
        let needs_flow = !m.slits.is_empty() || !marks.is_empty();
        if needs_flow {
            match substep_moduli(&m, &marks, xi, xi1, h, cfg) {
                Ok((m1, z1)) => {
                    let scale = m1.min_height().unwrap_or(1.0).min(1.0);
                    let collided =
                        boundary_marks && z1.iter().any(|z| (z.re - xi1).abs() < 1e-9 * scale);
                    let collapsed = m1.min_height().is_some_and(|y| y < cfg.collapse);
                    if collided || collapsed || !m1.is_valid() {
                        out.path.stop_time = Some(t + h);
                        return Ok(out);
                    }
                    m = m1;
                    marks = z1;
                }
                Err(Error::InvalidModuli(_))
                | Err(Error::Numeric(_))
                | Err(Error::NotInterior(_)) => {
                    out.path.stop_time = Some(t + h);
                    return Ok(out);
                }
                Err(e) => return Err(e),
            }
        }
        xi = xi1;
        out.path.times.push(t + h);
        out.path.xi.push(xi);
        out.path.moduli.push(Moduli::Chordal(m.clone()));
        out.marks.push(marks.clone());
    }
    let field = ChordalField::with_config(&m, cfg.field)?;
    out.k.push(field.kernel(xi)?.k());
    Ok(out)
}

fn substep_moduli(
    m: &ChordalModuli,
    marks: &[Complex64],
    xi0: f64,
    xi1: f64,
    h: f64,
    cfg: &SdeConfig,
) -> Result<(ChordalModuli, Vec<Complex64>)> {
    let nm = m.slits.len() * 3;
    let mut y: Vec<f64> = m.to_vec();
    for z in marks {
        y.push(z.re);
        y.push(z.im);
    }
    let rhs = |s: f64, v: &[f64]| -> Result<Vec<f64>> {
        let xi = xi0 + (xi1 - xi0) * s / h;
        let mm = ChordalModuli::from_vec(&v[..nm]);
        let field = ChordalField::with_config(&mm, cfg.field)?;
        let kern = field.kernel(xi)?;
        let mut out = if nm > 0 {
            chordal_velocity_shifted(&kern, kern.k()).to_vec()
        } else {
            Vec::new()
        };
        for p in v[nm..].chunks(2) {
            let z = Complex64::new(p[0], p[1]);
            let d = -kern.psi0_unchecked(z);
            if !d.re.is_finite() {
                return Err(Error::Pole(z));
            }
            out.push(d.re);
            // boundary marks stay on the real axis
            out.push(if p[1] == 0.0 { 0.0 } else { d.im });
        }
        Ok(out)
    };
    let add = |a: &[f64], b: &[f64], s: f64| -> Vec<f64> {
        a.iter().zip(b).map(|(x, d)| x + s * d).collect()
    };
    let hs = h / cfg.substeps as f64;
    for j in 0..cfg.substeps {
        let s = j as f64 * hs;
        let k1 = rhs(s, &y)?;
        let k2 = rhs(s + 0.5 * hs, &add(&y, &k1, 0.5 * hs))?;
        let k3 = rhs(s + 0.5 * hs, &add(&y, &k2, 0.5 * hs))?;
        let k4 = rhs(s + hs, &add(&y, &k3, hs))?;
        for i in 0..y.len() {
            y[i] += hs / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    let m1 = ChordalModuli::from_vec(&y[..nm]);
    let z1 = y[nm..]
        .chunks(2)
        .map(|p| Complex64::new(p[0], p[1]))
        .collect();
    Ok((m1, z1))
}

/// Samples a driver and extracts its trace.
pub fn sample_trace(
    m0: &ChordalModuli,
    drift: &Drift,
    cfg: &SdeConfig,
    flow: FlowConfig,
) -> Result<TraceSample> {
    let s = sample_path(m0, drift, cfg)?;
    trace_forward(&s.to_field_gauge(), 0.0, flow)
}
