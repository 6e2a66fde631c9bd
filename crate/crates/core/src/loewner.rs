//! Forward Loewner flows, trace extraction and driving-function recovery.
//!
//! Chordal flows use Strang splitting of `dg/dt = -Psi(g, xi)` into the pole part
//! `2 / (g - xi)`, integrated exactly by the vertical slit map, and the smooth remainder,
//! integrated by RK4 with the engine of the adjacent snapshot. For the half plane the
//! remainder vanishes and the flow is exact for piecewise constant drivers.

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{ChordalModuli, DrivenPath, Moduli, TraceSample};
use crate::error::{Error, Result};
use crate::field::{BilateralField, ChordalField, FieldConfig};
use crate::moduli_flow::chordal_rhs_with;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub field: FieldConfig,
    /// A point is swallowed when it comes this close to the driving point, relative to
    /// `min(1, smallest slit height)`.
    pub swallow_radius: f64,
    /// Height above the driving point where backward trace integration starts.
    pub tip_lift: f64,
    /// Largest `|d xi| / sqrt(dt)` accepted by the zipper before asking for refinement.
    pub max_slope: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            field: FieldConfig::default(),
            swallow_radius: 1e-3,
            tip_lift: 1e-4,
            max_slope: 20.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowResult {
    pub z0: Complex64,
    pub z_t: Complex64,
    pub swallowed_at: Option<f64>,
}

/// Image of `z` under the vertical slit map `xi + sqrt((z - xi)^2 + c)`, on the upper branch.
#[inline]
pub fn slit_map(z: Complex64, xi: f64, c: f64) -> Complex64 {
    let d = z - xi;
    let mut r = (d * d + c).sqrt();
    if r.im < 0.0 || (r.im == 0.0 && r.re * d.re < 0.0) {
        r = -r;
    }
    xi + r
}

/// Cached engines along a chordal driven path.
#[derive(Debug, Clone)]
pub struct ChordalFlow {
    path: DrivenPath,
    fields: Vec<ChordalField>,
    coefs: Vec<DVector<f64>>,
    scales: Vec<f64>,
    cfg: FlowConfig,
}

impl ChordalFlow {
    pub fn new(path: &DrivenPath, cfg: FlowConfig) -> Result<Self> {
        if path.is_empty() {
            return Err(Error::Precondition("empty driven path".into()));
        }
        let built: Vec<Result<(ChordalField, DVector<f64>)>> = path
            .moduli
            .par_iter()
            .zip(&path.xi)
            .map(|(m, &xi)| {
                let m = m.as_chordal().ok_or_else(|| {
                    Error::Precondition("chordal flow needs chordal moduli".into())
                })?;
                let f = ChordalField::with_config(m, cfg.field)?;
                let c = f.kernel(xi)?.coefs().clone();
                Ok((f, c))
            })
            .collect();
        let mut fields = Vec::with_capacity(path.len());
        let mut coefs = Vec::with_capacity(path.len());
        for b in built {
            let (f, c) = b?;
            fields.push(f);
            coefs.push(c);
        }
        let scales = fields
            .iter()
            .map(|f| f.moduli().min_height().unwrap_or(1.0).min(1.0))
            .collect();
        Ok(Self {
            path: path.clone(),
            fields,
            coefs,
            scales,
            cfg,
        })
    }

    pub fn path(&self) -> &DrivenPath {
        &self.path
    }

    pub fn field(&self, i: usize) -> &ChordalField {
        &self.fields[i]
    }

    /// Smooth part `-(Psi + 2/(z - xi))` of the velocity at snapshot `i`.
    fn smooth(&self, i: usize, z: Complex64) -> Complex64 {
        if self.coefs[i].is_empty() {
            return Complex64::new(0.0, 0.0);
        }
        -I * self.fields[i].eval_analytic(&self.coefs[i], z)
    }

    fn smooth_step(&self, i: usize, z: Complex64, h: f64) -> Complex64 {
        if self.coefs[i].is_empty() {
            return z;
        }
        let k1 = self.smooth(i, z);
        let k2 = self.smooth(i, z + 0.5 * h * k1);
        let k3 = self.smooth(i, z + 0.5 * h * k2);
        let k4 = self.smooth(i, z + h * k3);
        z + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    }

    fn xi_mid(&self, i: usize, frac: f64) -> f64 {
        let (a, b) = (self.path.xi[i], self.path.xi[i + 1]);
        a + 0.5 * frac * (b - a)
    }

    /// One step of the forward flow from snapshot `i`, covering the fraction `frac` of it.
    fn forward_step(&self, i: usize, z: Complex64, frac: f64) -> Complex64 {
        let h = frac * (self.path.times[i + 1] - self.path.times[i]);
        let z = self.smooth_step(i, z, 0.5 * h);
        let z = slit_map(z, self.xi_mid(i, frac), 4.0 * h);
        self.smooth_step(i + 1, z, 0.5 * h)
    }

    /// Exact inverse of the splitting structure of [`Self::forward_step`] for a full step.
    fn backward_step(&self, i: usize, w: Complex64) -> Complex64 {
        let h = self.path.times[i + 1] - self.path.times[i];
        let w = self.smooth_step(i + 1, w, -0.5 * h);
        let w = slit_map(w, self.xi_mid(i, 1.0), -4.0 * h);
        self.smooth_step(i, w, -0.5 * h)
    }

    /// Advances `z` over the full step from snapshot `i` to `i + 1`.
    pub fn step(&self, i: usize, z: Complex64) -> Complex64 {
        self.forward_step(i, z, 1.0)
    }

    /// `g_t(z)`, starting from the snapshot `start` at its own time.
    pub fn map_from(&self, start: usize, z: Complex64, t: f64) -> Result<FlowResult> {
        let times = &self.path.times;
        if start >= times.len() {
            return Err(Error::Precondition("start index beyond the path".into()));
        }
        if t < times[start] || t > self.path.horizon() * (1.0 + 1e-12) + 1e-12 {
            return Err(Error::Precondition(format!("time {t} outside the path")));
        }
        if let Some(s) = self.path.stop_time {
            if t > s {
                return Err(Error::Precondition(format!(
                    "time {t} beyond the stop time {s}"
                )));
            }
        }
        if !(z.im >= 0.0) || !z.re.is_finite() {
            return Err(Error::NotInterior(z));
        }
        let mut g = z;
        let mut i = start;
        while i + 1 < times.len() && times[i] < t {
            let frac = ((t - times[i]) / (times[i + 1] - times[i])).min(1.0);
            g = self.forward_step(i, g, frac);
            let ti = times[i] + frac * (times[i + 1] - times[i]);
            let xi_now = self.path.xi[i] + frac * (self.path.xi[i + 1] - self.path.xi[i]);
            let r = self.cfg.swallow_radius * self.scales[i];
            // interior points only reach the real axis through the driving point
            let landed = z.im > 0.0 && g.im <= 0.0;
            if !g.re.is_finite() || landed || (g - xi_now).norm() < r {
                return Ok(FlowResult {
                    z0: z,
                    z_t: g,
                    swallowed_at: Some(ti),
                });
            }
            if frac < 1.0 {
                break;
            }
            i += 1;
        }
        Ok(FlowResult {
            z0: z,
            z_t: g,
            swallowed_at: None,
        })
    }

    pub fn map(&self, z: Complex64, t: f64) -> Result<FlowResult> {
        self.map_from(0, z, t)
    }

    /// Backward integration of `xi(t_k) + i lift` to time 0.
    pub fn tip(&self, k: usize) -> Option<Complex64> {
        if k == 0 {
            return Some(Complex64::new(self.path.xi[0], 0.0));
        }
        let lift = self.cfg.tip_lift * self.scales[k];
        let mut w = Complex64::new(self.path.xi[k], lift);
        for i in (0..k).rev() {
            w = self.backward_step(i, w);
            if !(w.re.is_finite() && w.im.is_finite()) || w.im < -1e-9 {
                return None;
            }
        }
        Some(w)
    }

    /// Half-plane capacity of the hull at time `t`, from `z (g(z) - z)` averaged over
    /// the upper half circle of radius `radius`.
    pub fn capacity(&self, t: f64, radius: f64) -> Result<f64> {
        let n = 64;
        let mut acc = 0.0;
        for j in 0..n {
            let th = std::f64::consts::PI * (j as f64 + 0.5) / n as f64;
            let z = Complex64::from_polar(radius, th);
            let g = self.map(z, t)?.z_t;
            acc += (z * (g - z)).re;
        }
        Ok(acc / n as f64)
    }
}

/// `g_T(z)` along a chordal driven path.
pub fn flow_map(path: &DrivenPath, z: Complex64, t: f64) -> Result<FlowResult> {
    ChordalFlow::new(path, FlowConfig::default())?.map(z, t)
}

/// The path restarted at snapshot `i`, with times shifted to start at 0.
pub fn restart(path: &DrivenPath, i: usize) -> DrivenPath {
    let t0 = path.times[i];
    DrivenPath {
        times: path.times[i..].iter().map(|t| t - t0).collect(),
        xi: path.xi[i..].to_vec(),
        moduli: path.moduli[i..].to_vec(),
        stop_time: path.stop_time.map(|s| s - t0),
    }
}

/// Trace points at the snapshots nearest to the multiples of `dt` (every snapshot when
/// `dt` is not larger than the path spacing).
pub fn trace_forward(path: &DrivenPath, dt: f64, cfg: FlowConfig) -> Result<TraceSample> {
    let flow = ChordalFlow::new(path, cfg)?;
    Ok(trace_with(&flow, dt))
}

pub fn trace_with(flow: &ChordalFlow, dt: f64) -> TraceSample {
    let path = flow.path();
    let mut idx = vec![0usize];
    let mut next = dt;
    for (i, &t) in path.times.iter().enumerate().skip(1) {
        if path.stop_time.is_some_and(|s| t >= s) {
            break;
        }
        if !(dt > 0.0) || t >= next - 1e-12 * (1.0 + next.abs()) {
            idx.push(i);
            while dt > 0.0 && next <= t + 1e-12 * (1.0 + t.abs()) {
                next += dt;
            }
        }
    }
    let tips: Vec<Option<Complex64>> = idx.par_iter().map(|&k| flow.tip(k)).collect();
    let mut out = TraceSample::default();
    for (n, (&k, p)) in idx.iter().zip(tips).enumerate() {
        out.times.push(path.times[k]);
        match p {
            Some(p) => out.points.push(p),
            None => {
                out.points.push(Complex64::new(f64::NAN, f64::NAN));
                out.unresolved.push(n);
            }
        }
    }
    out
}

/// Recovers `(xi, M)` from a curve by absorbing it one vertical micro-slit at a time.
///
/// `curve[0]` must lie on the real axis; the remaining points should be ordered along the
/// curve and spaced finely enough that each sub-arc looks straight after mapping.
pub fn driving_from_trace(
    m0: &ChordalModuli,
    curve: &[Complex64],
    cfg: FlowConfig,
) -> Result<DrivenPath> {
    if curve.is_empty() {
        return Err(Error::Precondition("empty curve".into()));
    }
    let scale = m0.min_height().unwrap_or(1.0).min(1.0);
    if curve[0].im.abs() > 1e-9 * (1.0 + curve[0].norm()) {
        return Err(Error::Precondition(
            "curve must start on the real axis".into(),
        ));
    }
    let mut m = m0.clone();
    let mut field = ChordalField::with_config(&m, cfg.field)?;
    let mut xi = curve[0].re;
    let mut t = 0.0;
    let mut path = DrivenPath {
        times: vec![0.0],
        xi: vec![xi],
        moduli: vec![Moduli::Chordal(m.clone())],
        stop_time: None,
    };
    let mut pts: Vec<Complex64> = curve[1..].to_vec();
    let smooth_step = |f: &ChordalField, c: &DVector<f64>, z: Complex64, h: f64| -> Complex64 {
        if c.is_empty() {
            return z;
        }
        let v = |z: Complex64| -I * f.eval_analytic(c, z);
        let k1 = v(z);
        let k2 = v(z + 0.5 * h * k1);
        let k3 = v(z + 0.5 * h * k2);
        let k4 = v(z + h * k3);
        z + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    };
    for k in 0..pts.len() {
        let w = pts[k];
        if !(w.im > 0.0) || !w.re.is_finite() {
            return Err(Error::Refinement { index: k + 1 });
        }
        // fixed point for (xi_mid, dtau) with the first smooth half step included
        let (mut xm, mut dtau) = (w.re, 0.25 * w.im * w.im);
        let mut coefs = field.kernel(xm)?.coefs().clone();
        for _ in 0..6 {
            let wp = smooth_step(&field, &coefs, w, 0.5 * dtau);
            let (nx, nd) = (wp.re, 0.25 * wp.im * wp.im);
            let done = (nx - xm).abs() + (nd - dtau).abs() <= 1e-14 * (1.0 + nx.abs());
            xm = nx;
            dtau = nd;
            if done || coefs.is_empty() {
                break;
            }
            coefs = field.kernel(xm)?.coefs().clone();
        }
        if !(dtau > 0.0) || (xm - xi).abs() > cfg.max_slope * 2.0 * dtau.sqrt() + 1e-12 * scale {
            return Err(Error::Refinement { index: k + 1 });
        }
        let m_new = if m.slits.is_empty() {
            m.clone()
        } else {
            advance_moduli(&m, xm, dtau, cfg.field)?
        };
        let field_new = ChordalField::with_config(&m_new, cfg.field)?;
        let coefs_new = field_new.kernel(xm)?.coefs().clone();
        let tip = smooth_step(&field_new, &coefs_new, Complex64::new(xm, 0.0), 0.5 * dtau);
        for p in pts[k + 1..].iter_mut() {
            let z = smooth_step(&field, &coefs, *p, 0.5 * dtau);
            let z = slit_map(z, xm, 4.0 * dtau);
            *p = smooth_step(&field_new, &coefs_new, z, 0.5 * dtau);
        }
        t += dtau;
        xi = tip.re;
        m = m_new;
        field = field_new;
        path.times.push(t);
        path.xi.push(xi);
        path.moduli.push(Moduli::Chordal(m.clone()));
    }
    Ok(path)
}

fn advance_moduli(m: &ChordalModuli, xi: f64, h: f64, cfg: FieldConfig) -> Result<ChordalModuli> {
    let y = m.to_vec();
    let f = |v: &[f64]| -> Result<Vec<f64>> {
        Ok(chordal_rhs_with(&ChordalModuli::from_vec(v), xi, cfg)?.to_vec())
    };
    let add = |a: &[f64], b: &[f64], s: f64| -> Vec<f64> {
        a.iter().zip(b).map(|(x, d)| x + s * d).collect()
    };
    let k1 = f(&y)?;
    let k2 = f(&add(&y, &k1, 0.5 * h))?;
    let k3 = f(&add(&y, &k2, 0.5 * h))?;
    let k4 = f(&add(&y, &k3, h))?;
    let out: Vec<f64> = (0..y.len())
        .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    Ok(ChordalModuli::from_vec(&out))
}

/// Canonical map of `E \ A` for a hull `A` grown by a deterministic driver.
#[derive(Debug, Clone)]
pub struct HullMap {
    flow: ChordalFlow,
    m_star: ChordalModuli,
}

impl HullMap {
    /// `Phi_A(z)`; fails if `z` is swallowed by the hull.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        let t = self.flow.path().horizon();
        let r = self.flow.map(z, t)?;
        match r.swallowed_at {
            Some(_) => Err(Error::Precondition(format!(
                "point {z} is swallowed by the hull"
            ))),
            None => Ok(r.z_t),
        }
    }

    /// Moduli of the image domain `E*`.
    pub fn moduli(&self) -> &ChordalModuli {
        &self.m_star
    }

    pub fn flow(&self) -> &ChordalFlow {
        &self.flow
    }
}

pub fn hull_map(m0: &ChordalModuli, a: &DrivenPath, cfg: FlowConfig) -> Result<HullMap> {
    let first = a
        .moduli
        .first()
        .and_then(Moduli::as_chordal)
        .ok_or_else(|| Error::Precondition("hull path must be chordal".into()))?;
    let d = first
        .to_vec()
        .iter()
        .zip(m0.to_vec())
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max);
    if first.slits.len() != m0.slits.len() || d > 1e-12 {
        return Err(Error::Precondition(
            "hull path does not start from the given moduli".into(),
        ));
    }
    if a.stop_time.is_some() {
        return Err(Error::Precondition("hull path collapsed".into()));
    }
    let flow = ChordalFlow::new(a, cfg)?;
    let m_star = a
        .moduli
        .last()
        .and_then(Moduli::as_chordal)
        .cloned()
        .unwrap_or_else(|| m0.clone());
    Ok(HullMap { flow, m_star })
}

/// Cached engines along a bilateral driven path, at every snapshot and step midpoint.
#[derive(Debug, Clone)]
pub struct BilateralFlow {
    path: DrivenPath,
    nodes: Vec<BilateralNode>,
    mids: Vec<BilateralNode>,
    cfg: FlowConfig,
}

#[derive(Debug, Clone)]
struct BilateralNode {
    field: BilateralField,
    coefs: DVector<f64>,
    zeta: Complex64,
}

impl BilateralNode {
    fn build(m: &crate::domain::BilateralModuli, xi: f64, cfg: FieldConfig) -> Result<Self> {
        let field = BilateralField::with_config(m, cfg)?;
        let coefs = field.kernel(xi)?.coefs().clone();
        Ok(Self {
            field,
            coefs,
            zeta: Complex64::from_polar(1.0, xi),
        })
    }

    /// `d ln g / dt = 1 + i [Psi(g) - Psi(Q)]`.
    fn velocity(&self, g: Complex64) -> Complex64 {
        let q = Complex64::new(self.field.moduli().inner_radius(), 0.0);
        let psi = |z| self.field.psi_from(self.zeta, &self.coefs, z);
        1.0 + I * (psi(g) - psi(q))
    }
}

impl BilateralFlow {
    pub fn new(path: &DrivenPath, cfg: FlowConfig) -> Result<Self> {
        if path.is_empty() {
            return Err(Error::Precondition("empty driven path".into()));
        }
        let ms: Vec<&crate::domain::BilateralModuli> = path
            .moduli
            .iter()
            .map(|m| {
                m.as_bilateral().ok_or_else(|| {
                    Error::Precondition("bilateral flow needs bilateral moduli".into())
                })
            })
            .collect::<Result<_>>()?;
        let nodes = (0..path.len())
            .into_par_iter()
            .map(|i| BilateralNode::build(ms[i], path.xi[i], cfg.field))
            .collect::<Result<Vec<_>>>()?;
        let mids = (0..path.len().saturating_sub(1))
            .into_par_iter()
            .map(|i| {
                let (a, b) = (ms[i].to_vec(), ms[i + 1].to_vec());
                let v: Vec<f64> = a.iter().zip(&b).map(|(p, q)| 0.5 * (p + q)).collect();
                let m = crate::domain::BilateralModuli::from_vec(
                    0.5 * (ms[i].log_q + ms[i + 1].log_q),
                    &v,
                );
                BilateralNode::build(&m, 0.5 * (path.xi[i] + path.xi[i + 1]), cfg.field)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            path: path.clone(),
            nodes,
            mids,
            cfg,
        })
    }

    /// `g_T(z)` for an absolute time `T` (starting from `ln Q`).
    pub fn map(&self, z: Complex64, t_end: f64) -> Result<FlowResult> {
        let times = &self.path.times;
        if t_end < times[0] || t_end > self.path.horizon() + 1e-12 {
            return Err(Error::Precondition(format!(
                "time {t_end} outside the path"
            )));
        }
        let q = self.nodes[0].field.moduli().inner_radius();
        let r = z.norm();
        if !(r >= q * (1.0 - 1e-12) && r < 1.0) {
            return Err(Error::NotInterior(z));
        }
        let mut lg = z.ln();
        for i in 0..times.len() - 1 {
            if times[i] >= t_end {
                break;
            }
            let full = times[i + 1] - times[i];
            if times[i + 1] > t_end + 1e-12 {
                return Err(Error::Precondition(
                    "bilateral flow times must lie on the path grid".into(),
                ));
            }
            let (a, m, b) = (&self.nodes[i], &self.mids[i], &self.nodes[i + 1]);
            let k1 = a.velocity(lg.exp());
            let k2 = m.velocity((lg + 0.5 * full * k1).exp());
            let k3 = m.velocity((lg + 0.5 * full * k2).exp());
            let k4 = b.velocity((lg + full * k3).exp());
            lg += full / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            let g = lg.exp();
            if !g.re.is_finite() || (g - b.zeta).norm() < self.cfg.swallow_radius {
                return Ok(FlowResult {
                    z0: z,
                    z_t: g,
                    swallowed_at: Some(times[i + 1]),
                });
            }
        }
        Ok(FlowResult {
            z0: z,
            z_t: lg.exp(),
            swallowed_at: None,
        })
    }
}

pub fn bilateral_flow(path: &DrivenPath, z: Complex64, t_end: f64) -> Result<FlowResult> {
    BilateralFlow::new(path, FlowConfig::default())?.map(z, t_end)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Slit;

    fn constant_path(m: ChordalModuli, xi: f64, t: f64, n: usize) -> DrivenPath {
        crate::moduli_flow::evolve(&m.into(), |_| xi, t, t / n as f64, &Default::default()).unwrap()
    }

    #[test]
    fn slit_map_branches() {
        let z = slit_map(Complex64::new(1.0, 1.0), 0.0, 2.0);
        assert!((z - Complex64::new(2.0, 2.0).sqrt()).norm() < 1e-15);
        assert_eq!(
            slit_map(Complex64::new(-3.0, 0.0), 0.0, 4.0),
            Complex64::new(-(13f64).sqrt(), 0.0)
        );
        let w = slit_map(Complex64::new(0.0, 0.0), 0.0, -4.0);
        assert!((w - Complex64::new(0.0, 2.0)).norm() < 1e-15);
    }

    #[test]
    fn half_plane_closed_form() {
        let path = constant_path(ChordalModuli::half_plane(), 0.0, 0.5, 10);
        let r = flow_map(&path, Complex64::new(1.0, 1.0), 0.5).unwrap();
        assert!((r.z_t - Complex64::new(2.0, 2.0).sqrt()).norm() < 1e-12);
        let tr = trace_forward(&path, 0.0, FlowConfig::default()).unwrap();
        for (t, p) in tr.times.iter().zip(&tr.points) {
            assert!((p - Complex64::new(0.0, 2.0 * t.sqrt())).norm() < 1e-4);
        }
    }

    #[test]
    fn swallowing_is_reported() {
        let path = constant_path(ChordalModuli::half_plane(), 0.0, 1.0, 50);
        let r = flow_map(&path, Complex64::new(0.0, 1.0), 1.0).unwrap();
        assert!(r.swallowed_at.is_some());
    }

    #[test]
    fn semigroup_on_a_slit_domain() {
        let m = ChordalModuli::new(vec![Slit::new(1.0, -1.0, 1.0)]);
        let path = crate::moduli_flow::evolve(
            &m.into(),
            |t| 0.3 * t.sin() + 2.0,
            0.4,
            0.02,
            &Default::default(),
        )
        .unwrap();
        let z = Complex64::new(0.4, 2.0);
        let direct = flow_map(&path, z, 0.4).unwrap().z_t;
        let mid = flow_map(&path, z, 0.2).unwrap().z_t;
        let rest = restart(&path, 10);
        let two = flow_map(&rest, mid, 0.2).unwrap().z_t;
        assert!((direct - two).norm() < 1e-12);
    }

    #[test]
    fn vertical_segment_driver() {
        let curve: Vec<Complex64> = (0..=100)
            .map(|i| Complex64::new(0.0, i as f64 * 0.02))
            .collect();
        let p = driving_from_trace(&ChordalModuli::half_plane(), &curve, FlowConfig::default())
            .unwrap();
        assert!(p.xi.iter().all(|x| x.abs() < 1e-12));
        let t = p.horizon();
        assert!((t - 1.0).abs() < 1e-2, "{t}");
    }

    #[test]
    fn tight_turns_need_refinement() {
        let curve = vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.01),
            Complex64::new(5.0, 0.011),
        ];
        let r = driving_from_trace(&ChordalModuli::half_plane(), &curve, FlowConfig::default());
        assert!(matches!(r, Err(Error::Refinement { .. })));
    }
}
