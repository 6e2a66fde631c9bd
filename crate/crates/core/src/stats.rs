//! Two-sample Kolmogorov-Smirnov test and small summary helpers.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub critical: f64,
    pub alpha: f64,
    pub n: usize,
    pub m: usize,
}

impl KsResult {
    /// True when the two samples are compatible at level `alpha`.
    pub fn accepts(&self) -> bool {
        self.statistic <= self.critical
    }
}

/// Asymptotic coefficient `c(alpha) = sqrt(-ln(alpha / 2) / 2)`.
pub fn ks_coefficient(alpha: f64) -> f64 {
    (-(0.5 * alpha).ln() * 0.5).sqrt()
}

/// Largest gap between the empirical distribution functions of `a` and `b`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

pub fn ks_two_sample(a: &[f64], b: &[f64], alpha: f64) -> KsResult {
    let (n, m) = (a.len(), b.len());
    let scale = ((n + m) as f64 / (n as f64 * m as f64)).sqrt();
    KsResult {
        statistic: ks_statistic(a, b),
        critical: ks_coefficient(alpha) * scale,
        alpha,
        n,
        m,
    }
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Unbiased sample variance.
pub fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() as f64 - 1.0)
}
