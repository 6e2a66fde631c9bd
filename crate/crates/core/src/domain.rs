//! Value types for standard domains, their moduli, driven paths and traces.
//!
//! A chordal standard domain is the upper half-plane minus `n - 1` horizontal
//! slits; a bilateral standard domain is the annulus `Q < |z| < 1` minus
//! `n - 2` concentric circular arcs. Both are identified by their moduli.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::io::{self, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used for closed-segment intersection tests.
pub const DISJOINT_TOL: f64 = 1e-12;

/// Horizontal slit `{x + i y : x in [x, xp]}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slit {
    pub y: f64,
    pub x: f64,
    pub xp: f64,
}

impl Slit {
    pub fn new(y: f64, x: f64, xp: f64) -> Self {
        Self { y, x, xp }
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.x + self.xp), self.y)
    }

    pub fn half_length(&self) -> f64 {
        0.5 * (self.xp - self.x)
    }

    pub fn left_tip(&self) -> Complex64 {
        Complex64::new(self.x, self.y)
    }

    pub fn right_tip(&self) -> Complex64 {
        Complex64::new(self.xp, self.y)
    }

    /// Distance from `z` to the closed segment.
    pub fn distance(&self, z: Complex64) -> f64 {
        let cx = z.re.clamp(self.x, self.xp);
        Complex64::new(z.re - cx, z.im - self.y).norm()
    }
}

/// Moduli of a chordal standard domain: the list of slits.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ChordalModuli {
    pub slits: Vec<Slit>,
}

/// Circular slit `{e^{m + i θ} : θ in [th, thp]}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub m: f64,
    pub th: f64,
    pub thp: f64,
}

impl Arc {
    pub fn new(m: f64, th: f64, thp: f64) -> Self {
        Self { m, th, thp }
    }

    pub fn radius(&self) -> f64 {
        self.m.exp()
    }

    pub fn mid_angle(&self) -> f64 {
        0.5 * (self.th + self.thp)
    }

    pub fn half_angle(&self) -> f64 {
        0.5 * (self.thp - self.th)
    }

    pub fn start_point(&self) -> Complex64 {
        Complex64::from_polar(self.radius(), self.th)
    }

    pub fn end_point(&self) -> Complex64 {
        Complex64::from_polar(self.radius(), self.thp)
    }

    /// Distance from `z` to the closed arc.
    pub fn distance(&self, z: Complex64) -> f64 {
        let r = self.radius();
        let (rho, phi) = z.to_polar();
        let d = angle_diff(phi, self.mid_angle()).abs();
        if d <= self.half_angle() {
            (rho - r).abs()
        } else {
            (z - self.start_point())
                .norm()
                .min((z - self.end_point()).norm())
        }
    }
}

/// Moduli of a bilateral standard domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BilateralModuli {
    #[serde(rename = "logQ")]
    pub log_q: f64,
    #[serde(default)]
    pub arcs: Vec<Arc>,
}

/// Either kind of standard domain, tagged for JSON as `{"type": ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Moduli {
    Chordal(ChordalModuli),
    Bilateral(BilateralModuli),
}

/// A violated domain invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonPositiveHeight { slit: usize },
    DegenerateSlit { slit: usize },
    IntersectingSlits { a: usize, b: usize },
    NonFinite { index: usize },
    LogQNotNegative,
    ArcOutsideAnnulus { arc: usize },
    ArcSpan { arc: usize },
    IntersectingArcs { a: usize, b: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonPositiveHeight { slit } => write!(f, "slit {slit}: y_j > 0 violated"),
            Violation::DegenerateSlit { slit } => write!(f, "slit {slit}: x_j < xp_j violated"),
            Violation::IntersectingSlits { a, b } => write!(f, "slits {a} and {b} intersect"),
            Violation::NonFinite { index } => write!(f, "entry {index}: non-finite value"),
            Violation::LogQNotNegative => write!(f, "logQ < 0 violated"),
            Violation::ArcOutsideAnnulus { arc } => write!(f, "arc {arc}: logQ < m_j < 0 violated"),
            Violation::ArcSpan { arc } => write!(f, "arc {arc}: th < thp < th + 2pi violated"),
            Violation::IntersectingArcs { a, b } => write!(f, "arcs {a} and {b} intersect"),
        }
    }
}

impl ChordalModuli {
    pub fn new(slits: Vec<Slit>) -> Self {
        Self { slits }
    }

    /// The half-plane itself (`n = 1`).
    pub fn half_plane() -> Self {
        Self::default()
    }

    /// Connectivity `n`.
    pub fn connectivity(&self) -> usize {
        self.slits.len() + 1
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (j, s) in self.slits.iter().enumerate() {
            if !(s.y.is_finite() && s.x.is_finite() && s.xp.is_finite()) {
                out.push(Violation::NonFinite { index: j });
                continue;
            }
            if s.y <= 0.0 {
                out.push(Violation::NonPositiveHeight { slit: j });
            }
            if s.x >= s.xp {
                out.push(Violation::DegenerateSlit { slit: j });
            }
        }
        for a in 0..self.slits.len() {
            for b in a + 1..self.slits.len() {
                let (s, t) = (&self.slits[a], &self.slits[b]);
                if (s.y - t.y).abs() <= DISJOINT_TOL
                    && s.x <= t.xp + DISJOINT_TOL
                    && t.x <= s.xp + DISJOINT_TOL
                {
                    out.push(Violation::IntersectingSlits { a, b });
                }
            }
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// Dilation `z -> c z` applied to the moduli.
    pub fn scale(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::Domain(format!(
                "scale factor must be positive, got {c}"
            )));
        }
        Ok(Self {
            slits: self
                .slits
                .iter()
                .map(|s| Slit::new(c * s.y, c * s.x, c * s.xp))
                .collect(),
        })
    }

    /// Horizontal translation `z -> z + a`.
    pub fn translate(&self, a: f64) -> Self {
        Self {
            slits: self
                .slits
                .iter()
                .map(|s| Slit::new(s.y, s.x + a, s.xp + a))
                .collect(),
        }
    }

    /// Flat vector `(y_1.., x_1.., xp_1..)`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.slits.iter().map(|s| s.y).collect();
        v.extend(self.slits.iter().map(|s| s.x));
        v.extend(self.slits.iter().map(|s| s.xp));
        v
    }

    pub fn from_vec(v: &[f64]) -> Self {
        let n = v.len() / 3;
        Self {
            slits: (0..n)
                .map(|j| Slit::new(v[j], v[n + j], v[2 * n + j]))
                .collect(),
        }
    }

    pub fn min_height(&self) -> Option<f64> {
        self.slits.iter().map(|s| s.y).reduce(f64::min)
    }

    /// Distance from `z` to the nearest slit (infinite for `n = 1`).
    pub fn distance_to_slits(&self, z: Complex64) -> f64 {
        self.slits
            .iter()
            .map(|s| s.distance(z))
            .fold(f64::INFINITY, f64::min)
    }

    /// Distance from a real point to the nearest slit shadow `[x_j, xp_j]`.
    pub fn shadow_distance(&self, xi: f64) -> f64 {
        self.slits
            .iter()
            .map(|s| {
                if xi < s.x {
                    s.x - xi
                } else if xi > s.xp {
                    xi - s.xp
                } else {
                    0.0
                }
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Degree-zero statistics `y_j / y_1` and `(x_j - x_1) / y_1`, invariant under dilation.
    pub fn dilation_invariants(&self) -> Vec<f64> {
        let Some(first) = self.slits.first() else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for s in &self.slits {
            out.push(s.y / first.y);
            out.push((s.x - first.x) / first.y);
            out.push((s.xp - first.x) / first.y);
        }
        out
    }
}

impl BilateralModuli {
    pub fn new(log_q: f64, arcs: Vec<Arc>) -> Self {
        Self { log_q, arcs }
    }

    pub fn inner_radius(&self) -> f64 {
        self.log_q.exp()
    }

    pub fn connectivity(&self) -> usize {
        self.arcs.len() + 2
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !self.log_q.is_finite() {
            out.push(Violation::NonFinite { index: 0 });
        } else if self.log_q >= 0.0 {
            out.push(Violation::LogQNotNegative);
        }
        for (j, a) in self.arcs.iter().enumerate() {
            if !(a.m.is_finite() && a.th.is_finite() && a.thp.is_finite()) {
                out.push(Violation::NonFinite { index: j + 1 });
                continue;
            }
            if !(self.log_q < a.m && a.m < 0.0) {
                out.push(Violation::ArcOutsideAnnulus { arc: j });
            }
            if !(a.th < a.thp && a.thp < a.th + 2.0 * PI) {
                out.push(Violation::ArcSpan { arc: j });
            }
        }
        for a in 0..self.arcs.len() {
            for b in a + 1..self.arcs.len() {
                let (s, t) = (&self.arcs[a], &self.arcs[b]);
                if (s.m - t.m).abs() <= DISJOINT_TOL {
                    let d = angle_diff(s.mid_angle(), t.mid_angle()).abs();
                    if d <= s.half_angle() + t.half_angle() + DISJOINT_TOL {
                        out.push(Violation::IntersectingArcs { a, b });
                    }
                }
            }
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// Rotation `z -> e^{i alpha} z` applied to the arcs.
    pub fn rotate(&self, alpha: f64) -> Self {
        Self {
            log_q: self.log_q,
            arcs: self
                .arcs
                .iter()
                .map(|a| {
                    let th = (a.th + alpha).rem_euclid(2.0 * PI);
                    Arc::new(a.m, th, th + (a.thp - a.th))
                })
                .collect(),
        }
    }

    /// Flat vector `(m.., th.., thp..)`; `logQ` is the time variable and not included.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.arcs.iter().map(|a| a.m).collect();
        v.extend(self.arcs.iter().map(|a| a.th));
        v.extend(self.arcs.iter().map(|a| a.thp));
        v
    }

    pub fn from_vec(log_q: f64, v: &[f64]) -> Self {
        let n = v.len() / 3;
        Self {
            log_q,
            arcs: (0..n)
                .map(|j| Arc::new(v[j], v[n + j], v[2 * n + j]))
                .collect(),
        }
    }

    /// Smallest log-distance of an arc to either circle.
    pub fn min_gap(&self) -> Option<f64> {
        self.arcs
            .iter()
            .map(|a| (a.m - self.log_q).min(-a.m))
            .reduce(f64::min)
    }

    pub fn distance_to_boundary(&self, z: Complex64) -> f64 {
        let r = z.norm();
        let mut d = (1.0 - r).min(r - self.inner_radius());
        for a in &self.arcs {
            d = d.min(a.distance(z));
        }
        d
    }
}

impl Moduli {
    pub fn validate(&self) -> Vec<Violation> {
        match self {
            Moduli::Chordal(m) => m.validate(),
            Moduli::Bilateral(m) => m.validate(),
        }
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    pub fn as_chordal(&self) -> Option<&ChordalModuli> {
        match self {
            Moduli::Chordal(m) => Some(m),
            Moduli::Bilateral(_) => None,
        }
    }

    pub fn as_bilateral(&self) -> Option<&BilateralModuli> {
        match self {
            Moduli::Bilateral(m) => Some(m),
            Moduli::Chordal(_) => None,
        }
    }
}

impl From<ChordalModuli> for Moduli {
    fn from(m: ChordalModuli) -> Self {
        Moduli::Chordal(m)
    }
}

impl From<BilateralModuli> for Moduli {
    fn from(m: BilateralModuli) -> Self {
        Moduli::Bilateral(m)
    }
}

/// Signed difference `a - b` reduced to `(-pi, pi]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    if d > PI {
        d - 2.0 * PI
    } else {
        d
    }
}

/// Sampled trajectory `(t, xi(t), M(t))` of a driving function together with the moduli.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrivenPath {
    pub times: Vec<f64>,
    pub xi: Vec<f64>,
    pub moduli: Vec<Moduli>,
    #[serde(default)]
    pub stop_time: Option<f64>,
}

impl DrivenPath {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    /// Checks the structural invariants: matching lengths, strictly increasing times,
    /// valid snapshots and increments bounded by `max_increment`.
    pub fn check(&self, max_increment: f64) -> Result<()> {
        if self.xi.len() != self.times.len() || self.moduli.len() != self.times.len() {
            return Err(Error::Precondition(
                "path columns have different lengths".into(),
            ));
        }
        for w in self.times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::Precondition(
                    "path times not strictly increasing".into(),
                ));
            }
        }
        for w in self.xi.windows(2) {
            if (w[1] - w[0]).abs() > max_increment {
                return Err(Error::Precondition(format!(
                    "driver increment {} exceeds continuity budget {max_increment}",
                    (w[1] - w[0]).abs()
                )));
            }
        }
        for (i, m) in self.moduli.iter().enumerate() {
            let before_stop = self.stop_time.map_or(true, |s| self.times[i] < s);
            if before_stop && !m.is_valid() {
                return Err(Error::InvalidModuli(format!(
                    "snapshot {i} is not a standard domain"
                )));
            }
        }
        Ok(())
    }

    /// Index of the last snapshot with `times[i] <= t`.
    pub fn index_at(&self, t: f64) -> usize {
        match self.times.partition_point(|&s| s <= t) {
            0 => 0,
            k => k - 1,
        }
    }

    /// CSV export: `t, xi`, then `y.., x.., xp..` (chordal) or `logQ, m.., th.., thp..` (bilateral).
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let header = match self.moduli.first() {
            Some(Moduli::Chordal(m)) => {
                let n = m.slits.len();
                let mut h = vec!["t".to_string(), "xi".to_string()];
                h.extend((1..=n).map(|j| format!("y_{j}")));
                h.extend((1..=n).map(|j| format!("x_{j}")));
                h.extend((1..=n).map(|j| format!("xp_{j}")));
                h
            }
            Some(Moduli::Bilateral(m)) => {
                let n = m.arcs.len();
                let mut h = vec!["t".to_string(), "xi".to_string(), "logQ".to_string()];
                h.extend((1..=n).map(|j| format!("m_{j}")));
                h.extend((1..=n).map(|j| format!("th_{j}")));
                h.extend((1..=n).map(|j| format!("thp_{j}")));
                h
            }
            None => vec!["t".to_string(), "xi".to_string()],
        };
        writeln!(w, "{}", header.join(","))?;
        for i in 0..self.len() {
            let mut row = vec![fmt_f64(self.times[i]), fmt_f64(self.xi[i])];
            match &self.moduli[i] {
                Moduli::Chordal(m) => row.extend(m.to_vec().into_iter().map(fmt_f64)),
                Moduli::Bilateral(m) => {
                    row.push(fmt_f64(m.log_q));
                    row.extend(m.to_vec().into_iter().map(fmt_f64));
                }
            }
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Points of a growing curve with their capacity timestamps.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TraceSample {
    pub times: Vec<f64>,
    pub points: Vec<Complex64>,
    /// Sample points swallowed by the hull, keyed by index, with their swallowing time.
    #[serde(default)]
    pub escaped: BTreeMap<usize, f64>,
    /// Indices whose tip could not be resolved by backward integration.
    #[serde(default)]
    pub unresolved: Vec<usize>,
}

impl TraceSample {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// CSV export with columns `t, re, im`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,re,im")?;
        for (t, p) in self.times.iter().zip(&self.points) {
            writeln!(w, "{},{},{}", fmt_f64(*t), fmt_f64(p.re), fmt_f64(p.im))?;
        }
        Ok(())
    }
}

/// Fixed 17-significant-digit formatting used by every CSV export.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}
