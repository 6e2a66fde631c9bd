//! Motion of the moduli under a driving function, and its integration up to collapse.

use serde::{Deserialize, Serialize};

use crate::domain::{angle_diff, BilateralModuli, ChordalModuli, DrivenPath, Moduli};
use crate::error::{Error, Result};
use crate::field::{BilateralField, BilateralKernel, ChordalField, FieldConfig, PsiKernel};

/// Velocity of chordal moduli per unit capacity time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChordalVelocity {
    pub dy: Vec<f64>,
    pub dx: Vec<f64>,
    pub dxp: Vec<f64>,
}

impl ChordalVelocity {
    /// Flat vector in the layout of [`ChordalModuli::to_vec`].
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.dy.clone();
        v.extend(&self.dx);
        v.extend(&self.dxp);
        v
    }
}

/// Velocity of bilateral moduli per unit `ln Q` time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BilateralVelocity {
    pub dm: Vec<f64>,
    pub dth: Vec<f64>,
    pub dthp: Vec<f64>,
}

impl BilateralVelocity {
    /// Flat vector in the layout of [`BilateralModuli::to_vec`].
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.dm.clone();
        v.extend(&self.dth);
        v.extend(&self.dthp);
        v
    }
}

/// Chordal moduli velocity for the driving point `xi`.
pub fn chordal_rhs(m: &ChordalModuli, xi: f64) -> Result<ChordalVelocity> {
    chordal_rhs_with(m, xi, FieldConfig::default())
}

pub fn chordal_rhs_with(
    m: &ChordalModuli,
    xi: f64,
    config: FieldConfig,
) -> Result<ChordalVelocity> {
    let field = ChordalField::with_config(m, config)?;
    Ok(chordal_velocity(&field.kernel(xi)?))
}

/// Velocity from a prepared kernel: slit points move by `-Psi`.
pub fn chordal_velocity(kern: &PsiKernel<'_>) -> ChordalVelocity {
    chordal_velocity_shifted(kern, 0.0)
}

/// As [`chordal_velocity`] with `Psi` replaced by `Psi - shift` in the real parts.
pub(crate) fn chordal_velocity_shifted(kern: &PsiKernel<'_>, shift: f64) -> ChordalVelocity {
    let slits = &kern_moduli(kern).slits;
    let dy = kern.lambda().iter().map(|l| -l).collect();
    let dx = slits
        .iter()
        .map(|s| -(kern.psi_unchecked(s.left_tip()).re - shift))
        .collect();
    let dxp = slits
        .iter()
        .map(|s| -(kern.psi_unchecked(s.right_tip()).re - shift))
        .collect();
    ChordalVelocity { dy, dx, dxp }
}

fn kern_moduli<'a>(kern: &PsiKernel<'a>) -> &'a ChordalModuli {
    kern.field().moduli()
}

/// Height velocities computed from the period matrix and the normal derivatives of the
/// harmonic measures at `xi` (normal pointing out of the domain).
pub fn dy_from_periods(field: &ChordalField, xi: f64) -> Result<Vec<f64>> {
    Ok(field
        .slit_levels_from_periods(xi)?
        .into_iter()
        .map(|v| -v)
        .collect())
}

/// Bilateral moduli velocity for the driving angle `xi`.
pub fn bilateral_rhs(m: &BilateralModuli, xi: f64) -> Result<BilateralVelocity> {
    bilateral_rhs_with(m, xi, FieldConfig::default())
}

pub fn bilateral_rhs_with(
    m: &BilateralModuli,
    xi: f64,
    config: FieldConfig,
) -> Result<BilateralVelocity> {
    let field = BilateralField::with_config(m, config)?;
    Ok(bilateral_velocity(&field.kernel(xi)?, m))
}

pub fn bilateral_velocity(kern: &BilateralKernel<'_>, m: &BilateralModuli) -> BilateralVelocity {
    let mut out = BilateralVelocity {
        dm: Vec::new(),
        dth: Vec::new(),
        dthp: Vec::new(),
    };
    for a in &m.arcs {
        let vs = kern.log_velocity(a.start_point());
        let ve = kern.log_velocity(a.end_point());
        out.dm.push(vs.re);
        out.dth.push(vs.im);
        out.dthp.push(ve.im);
    }
    out
}

/// Integration settings for [`evolve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveConfig {
    pub field: FieldConfig,
    /// Heights (or log-gaps) below this declare the stop time.
    pub collapse: f64,
    /// Steps are error-controlled when the driver is this close to a slit shadow,
    /// relative to the smallest height.
    pub proximity: f64,
    /// Local error tolerance of the step-doubling control.
    pub step_tol: f64,
    pub max_halvings: u32,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            field: FieldConfig::default(),
            collapse: 1e-4,
            proximity: 0.2,
            step_tol: 1e-9,
            max_halvings: 20,
        }
    }
}

/// Integrates the moduli along `driver` with RK4 on the grid `dt`.
///
/// Chordal paths start at `t = 0` and run to `horizon`; bilateral paths start at `t = ln Q`
/// and run for a duration `horizon`. The driver is evaluated at absolute times.
pub fn evolve<D: Fn(f64) -> f64>(
    m0: &Moduli,
    driver: D,
    horizon: f64,
    dt: f64,
    cfg: &EvolveConfig,
) -> Result<DrivenPath> {
    if !(dt > 0.0) || !(horizon > 0.0) {
        return Err(Error::Precondition(format!(
            "need dt > 0 and horizon > 0, got {dt}, {horizon}"
        )));
    }
    let violations = m0.validate();
    if !violations.is_empty() {
        let msg: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(Error::InvalidModuli(msg.join("; ")));
    }
    let sys: Box<dyn System> = match m0 {
        Moduli::Chordal(m) => Box::new(ChordalSystem {
            cfg: *cfg,
            template: m.clone(),
        }),
        Moduli::Bilateral(m) => {
            if m.log_q + horizon >= 0.0 {
                return Err(Error::Precondition(
                    "bilateral horizon reaches ln Q = 0".into(),
                ));
            }
            Box::new(BilateralSystem { cfg: *cfg })
        }
    };
    let (t0, mut state) = match m0 {
        Moduli::Chordal(m) => (0.0, m.to_vec()),
        Moduli::Bilateral(m) => (m.log_q, m.to_vec()),
    };
    let steps = ((horizon / dt) - 1e-9).ceil().max(1.0) as usize;
    let mut path = DrivenPath {
        times: vec![t0],
        xi: vec![driver(t0)],
        moduli: vec![m0.clone()],
        stop_time: None,
    };
    let mut t = t0;
    for k in 1..=steps {
        let t1 = t0 + (k as f64 * dt).min(horizon);
        match advance(sys.as_ref(), &driver, t, t1 - t, &state, cfg, 0)? {
            Step::Done(next) => {
                state = next;
                t = t1;
                path.times.push(t);
                path.xi.push(driver(t));
                path.moduli.push(sys.moduli(t, &state));
            }
            Step::Collapsed(ts) => {
                path.stop_time = Some(ts);
                break;
            }
        }
    }
    Ok(path)
}

enum Step {
    Done(Vec<f64>),
    Collapsed(f64),
}

trait System {
    fn rhs(&self, t: f64, xi: f64, state: &[f64]) -> Result<Vec<f64>>;
    /// Distance to collapse; positive while the domain is healthy.
    fn margin(&self, t: f64, state: &[f64]) -> f64;
    fn near(&self, t: f64, xi: f64, state: &[f64]) -> bool;
    fn moduli(&self, t: f64, state: &[f64]) -> Moduli;
}

struct ChordalSystem {
    cfg: EvolveConfig,
    template: ChordalModuli,
}

impl System for ChordalSystem {
    fn rhs(&self, _t: f64, xi: f64, state: &[f64]) -> Result<Vec<f64>> {
        if self.template.slits.is_empty() {
            return Ok(Vec::new());
        }
        let m = ChordalModuli::from_vec(state);
        Ok(chordal_rhs_with(&m, xi, self.cfg.field)?.to_vec())
    }

    fn margin(&self, _t: f64, state: &[f64]) -> f64 {
        let n = state.len() / 3;
        state[..n].iter().fold(f64::INFINITY, |a, &y| a.min(y)) - self.cfg.collapse
    }

    fn near(&self, _t: f64, xi: f64, state: &[f64]) -> bool {
        let m = ChordalModuli::from_vec(state);
        match m.min_height() {
            Some(y) => m.shadow_distance(xi) < self.cfg.proximity * y,
            None => false,
        }
    }

    fn moduli(&self, _t: f64, state: &[f64]) -> Moduli {
        Moduli::Chordal(ChordalModuli::from_vec(state))
    }
}

struct BilateralSystem {
    cfg: EvolveConfig,
}

impl System for BilateralSystem {
    fn rhs(&self, t: f64, xi: f64, state: &[f64]) -> Result<Vec<f64>> {
        if state.is_empty() {
            return Ok(Vec::new());
        }
        let m = BilateralModuli::from_vec(t, state);
        Ok(bilateral_rhs_with(&m, xi, self.cfg.field)?.to_vec())
    }

    fn margin(&self, t: f64, state: &[f64]) -> f64 {
        let m = BilateralModuli::from_vec(t, state);
        m.min_gap().unwrap_or(-t) - self.cfg.collapse
    }

    fn near(&self, t: f64, xi: f64, state: &[f64]) -> bool {
        let m = BilateralModuli::from_vec(t, state);
        let gap = match m.min_gap() {
            Some(g) => g,
            None => return false,
        };
        m.arcs.iter().any(|a| {
            let d = (angle_diff(xi, a.mid_angle()).abs() - a.half_angle()).max(0.0);
            d < self.cfg.proximity * gap
        })
    }

    fn moduli(&self, t: f64, state: &[f64]) -> Moduli {
        Moduli::Bilateral(BilateralModuli::from_vec(t, state))
    }
}

fn rk4<D: Fn(f64) -> f64>(
    sys: &dyn System,
    driver: &D,
    t: f64,
    h: f64,
    y: &[f64],
) -> Result<Vec<f64>> {
    let add = |a: &[f64], b: &[f64], s: f64| -> Vec<f64> {
        a.iter().zip(b).map(|(x, d)| x + s * d).collect()
    };
    let tm = t + 0.5 * h;
    let (xm, x1) = (driver(tm), driver(t + h));
    let k1 = sys.rhs(t, driver(t), y)?;
    let k2 = sys.rhs(tm, xm, &add(y, &k1, 0.5 * h))?;
    let k3 = sys.rhs(tm, xm, &add(y, &k2, 0.5 * h))?;
    let k4 = sys.rhs(t + h, x1, &add(y, &k3, h))?;
    Ok((0..y.len())
        .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

fn advance<D: Fn(f64) -> f64>(
    sys: &dyn System,
    driver: &D,
    t: f64,
    h: f64,
    y: &[f64],
    cfg: &EvolveConfig,
    depth: u32,
) -> Result<Step> {
    let m0 = sys.margin(t, y);
    let split = |sys: &dyn System| -> Result<Step> {
        if depth >= cfg.max_halvings {
            // at the finest resolution a vanishing margin is a collapse, not a failure
            if m0 < 10.0 * cfg.collapse {
                return Ok(Step::Collapsed(t));
            }
            return Err(Error::StepUnderflow {
                t,
                last: y.to_vec(),
            });
        }
        match advance(sys, driver, t, 0.5 * h, y, cfg, depth + 1)? {
            Step::Done(mid) => advance(sys, driver, t + 0.5 * h, 0.5 * h, &mid, cfg, depth + 1),
            c => Ok(c),
        }
    };
    let full = match rk4(sys, driver, t, h, y) {
        Ok(v) => v,
        Err(Error::InvalidModuli(_)) | Err(Error::Numeric(_)) => return split(sys),
        Err(e) => return Err(e),
    };
    let m1 = sys.margin(t + h, &full);
    if m1 <= 0.0 {
        // resolve the crossing before declaring collapse
        if depth >= cfg.max_halvings.min(12) {
            let frac = if m0 > m1 { m0 / (m0 - m1) } else { 1.0 };
            return Ok(Step::Collapsed(t + frac.clamp(0.0, 1.0) * h));
        }
        return split(sys);
    }
    if sys.near(t, driver(t), y) {
        let two = rk4(sys, driver, t, 0.5 * h, y)
            .and_then(|mid| rk4(sys, driver, t + 0.5 * h, 0.5 * h, &mid));
        match two {
            Ok(fine) => {
                let err = full
                    .iter()
                    .zip(&fine)
                    .map(|(a, b)| (a - b).abs() / (1.0 + b.abs()))
                    .fold(0.0, f64::max);
                if err > cfg.step_tol && depth < cfg.max_halvings {
                    return split(sys);
                }
                return Ok(Step::Done(fine));
            }
            Err(_) => return split(sys),
        }
    }
    Ok(Step::Done(full))
}
