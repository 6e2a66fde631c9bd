//! Finite-difference Laplace oracles, independent of the series engine.
#![allow(dead_code)]

use mcl_core::domain::ChordalModuli;
use num_complex::Complex64;

/// Five-point Laplace solution on `[-l, l] x [0, l]` with the slits as internal Dirichlet
/// rows and the real axis as the bottom row, solved by multigrid V-cycles.
pub struct ChordalFd {
    pub h: f64,
    pub l: f64,
    nx: usize,
    ny: usize,
    u: Vec<f64>,
}

/// One multigrid level: mask of Dirichlet nodes and the far-field rows `u_b = r u_p + c`.
struct Level {
    h: f64,
    nx: usize,
    ny: usize,
    fixed: Vec<bool>,
    far: Vec<(usize, usize, f64)>,
}

impl Level {
    fn new(m: &ChordalModuli, h: f64, l: f64) -> Self {
        let nx = (2.0 * l / h).round() as usize + 1;
        let ny = (l / h).round() as usize + 1;
        let mut fixed = vec![false; nx * ny];
        fixed[..nx].iter_mut().for_each(|f| *f = true);
        for s in &m.slits {
            let j = (s.y / h).round() as usize;
            let i0 = ((s.x + l) / h).round() as usize;
            let i1 = ((s.xp + l) / h).round() as usize;
            for i in i0..=i1 {
                fixed[j * nx + i] = true;
            }
        }
        let center = if m.slits.is_empty() {
            0.0
        } else {
            m.slits.iter().map(|s| 0.5 * (s.x + s.xp)).sum::<f64>() / m.slits.len() as f64
        };
        // dipole decay u - axis ~ y / |z - center|^2 relative to the next node inward
        let dip = |i: usize, j: usize| {
            let z = Complex64::new(-l + i as f64 * h - center, j as f64 * h);
            z.im / z.norm_sqr()
        };
        let mut far = Vec::new();
        for j in 1..ny {
            for (i, ii) in [(0, 1), (nx - 1, nx - 2)] {
                far.push((j * nx + i, j * nx + ii, dip(i, j) / dip(ii, j)));
            }
        }
        for i in 1..nx - 1 {
            let j = ny - 1;
            far.push((j * nx + i, (j - 1) * nx + i, dip(i, j) / dip(i, j - 1)));
        }
        for &(b, _, _) in &far {
            fixed[b] = true;
        }
        Self {
            h,
            nx,
            ny,
            fixed,
            far,
        }
    }

    fn apply_far(&self, u: &mut [f64], axis: f64) {
        for &(b, p, r) in &self.far {
            u[b] = axis + r * (u[p] - axis);
        }
    }

    /// Red-black Gauss-Seidel on `-lap u = f`.
    fn smooth(&self, u: &mut [f64], f: &[f64], axis: f64, sweeps: usize, omega: f64) {
        let (nx, h2) = (self.nx, self.h * self.h);
        for _ in 0..sweeps {
            for color in 0..2 {
                for j in 1..self.ny - 1 {
                    let start = 1 + (j + 1 + color) % 2;
                    for i in (start..nx - 1).step_by(2) {
                        let k = j * nx + i;
                        if self.fixed[k] {
                            continue;
                        }
                        let avg = 0.25 * (u[k - 1] + u[k + 1] + u[k - nx] + u[k + nx] + h2 * f[k]);
                        u[k] += omega * (avg - u[k]);
                    }
                }
            }
            self.apply_far(u, axis);
        }
    }

    fn residual(&self, u: &[f64], f: &[f64]) -> Vec<f64> {
        let (nx, ih2) = (self.nx, 1.0 / (self.h * self.h));
        let mut r = vec![0.0; u.len()];
        for j in 1..self.ny - 1 {
            for i in 1..nx - 1 {
                let k = j * nx + i;
                if !self.fixed[k] {
                    r[k] = f[k] - ih2 * (4.0 * u[k] - u[k - 1] - u[k + 1] - u[k - nx] - u[k + nx]);
                }
            }
        }
        r
    }
}

fn v_cycle(levels: &[Level], u: &mut [f64], f: &[f64], axis: f64) {
    let lv = &levels[0];
    if levels.len() == 1 {
        let n = lv.nx.max(lv.ny) as f64;
        lv.smooth(
            u,
            f,
            axis,
            4 * n as usize,
            2.0 / (1.0 + (std::f64::consts::PI / n).sin()),
        );
        return;
    }
    lv.smooth(u, f, axis, 3, 1.0);
    let r = lv.residual(u, f);
    let co = &levels[1];
    let mut rc = vec![0.0; co.nx * co.ny];
    for jc in 1..co.ny - 1 {
        for ic in 1..co.nx - 1 {
            let kc = jc * co.nx + ic;
            if co.fixed[kc] {
                continue;
            }
            let k = 2 * jc * lv.nx + 2 * ic;
            let n = lv.nx;
            rc[kc] = (4.0 * r[k]
                + 2.0 * (r[k - 1] + r[k + 1] + r[k - n] + r[k + n])
                + r[k - n - 1]
                + r[k - n + 1]
                + r[k + n - 1]
                + r[k + n + 1])
                / 16.0;
        }
    }
    let mut ec = vec![0.0; rc.len()];
    v_cycle(&levels[1..], &mut ec, &rc, 0.0);
    for j in 0..lv.ny {
        for i in 0..lv.nx {
            let k = j * lv.nx + i;
            if lv.fixed[k] {
                continue;
            }
            let (ic, jc) = (i / 2, j / 2);
            let (tx, ty) = ((i % 2) as f64 * 0.5, (j % 2) as f64 * 0.5);
            let e = |a: usize, b: usize| ec[(b.min(co.ny - 1)) * co.nx + a.min(co.nx - 1)];
            u[k] += (1.0 - tx) * (1.0 - ty) * e(ic, jc)
                + tx * (1.0 - ty) * e(ic + 1, jc)
                + (1.0 - tx) * ty * e(ic, jc + 1)
                + tx * ty * e(ic + 1, jc + 1);
        }
    }
    lv.apply_far(u, axis);
    lv.smooth(u, f, axis, 3, 1.0);
}

impl ChordalFd {
    fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.l + i as f64 * self.h
    }

    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.h
    }

    /// Solves with value `axis` on the real axis, `slit(j, z)` on slit `j`, and a dipole
    /// far field `u - axis ~ c y / |z - center|^2` imposed at the outer rows.
    pub fn solve(
        m: &ChordalModuli,
        h: f64,
        l: f64,
        axis: f64,
        slit: &dyn Fn(usize, Complex64) -> f64,
    ) -> Self {
        assert!(on_grid(m, h), "slits must lie on grid lines");
        let mut levels = vec![Level::new(m, h, l)];
        loop {
            let last = levels.last().unwrap();
            let hc = 2.0 * last.h;
            if (last.nx - 1) % 2 != 0 || (last.ny - 1) % 2 != 0 || last.ny < 40 || !on_grid(m, hc) {
                break;
            }
            levels.push(Level::new(m, hc, l));
        }
        let lv = &levels[0];
        let (nx, ny) = (lv.nx, lv.ny);
        let mut u = vec![axis; nx * ny];
        for (sj, s) in m.slits.iter().enumerate() {
            let j = (s.y / h).round() as usize;
            let i0 = ((s.x + l) / h).round() as usize;
            let i1 = ((s.xp + l) / h).round() as usize;
            for i in i0..=i1 {
                u[j * nx + i] = slit(sj, Complex64::new(-l + i as f64 * h, s.y));
            }
        }
        let f = vec![0.0; nx * ny];
        for _ in 0..100 {
            v_cycle(&levels, &mut u, &f, axis);
            let r = lv.residual(&u, &f);
            if r.iter().fold(0.0f64, |a, v| a.max(v.abs())) * h * h < 1e-12 {
                break;
            }
        }
        Self { h, l, nx, ny, u }
    }

    /// Bilinear interpolation.
    pub fn value(&self, z: Complex64) -> f64 {
        let fx = (z.re + self.l) / self.h;
        let fy = z.im / self.h;
        let i = (fx.floor() as usize).min(self.nx - 2);
        let j = (fy.floor() as usize).min(self.ny - 2);
        let (tx, ty) = (fx - i as f64, fy - j as f64);
        let u = |i, j| self.u[self.idx(i, j)];
        (1.0 - tx) * (1.0 - ty) * u(i, j)
            + tx * (1.0 - ty) * u(i + 1, j)
            + (1.0 - tx) * ty * u(i, j + 1)
            + tx * ty * u(i + 1, j + 1)
    }

    /// Discrete flux of the solution out of a node box enclosing slit `s` with `pad` nodes
    /// of clearance; exact for the five-point scheme, so independent of the box.
    pub fn flux_out_of(&self, m: &ChordalModuli, s: usize, pad: usize) -> f64 {
        let sl = &m.slits[s];
        let j0 = (sl.y / self.h).round() as usize - pad;
        let j1 = (sl.y / self.h).round() as usize + pad;
        let i0 = ((sl.x + self.l) / self.h).round() as usize - pad;
        let i1 = ((sl.xp + self.l) / self.h).round() as usize + pad;
        let inside = |i: usize, j: usize| i >= i0 && i <= i1 && j >= j0 && j <= j1;
        let mut flux = 0.0;
        for j in j0..=j1 {
            for i in i0..=i1 {
                for (a, b) in [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)] {
                    if !inside(a, b) {
                        flux += self.u[self.idx(a, b)] - self.u[self.idx(i, j)];
                    }
                }
            }
        }
        flux
    }
}

fn on_grid(m: &ChordalModuli, h: f64) -> bool {
    let ok = |v: f64| ((v / h).round() * h - v).abs() < 1e-9;
    m.slits.iter().all(|s| ok(s.y) && ok(s.x) && ok(s.xp))
}

/// Five-point Laplace solution on the annulus `q < |z| < 1` in log-polar coordinates
/// `(rho, theta)`, where the Laplacian is `u_rho_rho + u_theta_theta`.
pub struct AnnulusFd {
    q: f64,
    nr: usize,
    nt: usize,
    u: Vec<f64>,
}

impl AnnulusFd {
    pub fn solve(
        q: f64,
        nr: usize,
        nt: usize,
        inner: &dyn Fn(f64) -> f64,
        outer: &dyn Fn(f64) -> f64,
    ) -> Self {
        let hr = -q.ln() / (nr - 1) as f64;
        let ht = 2.0 * std::f64::consts::PI / nt as f64;
        let mut u = vec![0.0; nr * nt];
        for t in 0..nt {
            let th = t as f64 * ht;
            u[t] = inner(th);
            u[(nr - 1) * nt + t] = outer(th);
        }
        let (ar, at) = (1.0 / (hr * hr), 1.0 / (ht * ht));
        let diag = 2.0 * (ar + at);
        let omega = 2.0 / (1.0 + (std::f64::consts::PI / nr.max(nt / 4) as f64).sin());
        for _ in 0..200_000 {
            let mut delta: f64 = 0.0;
            for color in 0..2 {
                for r in 1..nr - 1 {
                    for t in 0..nt {
                        if (r + t) % 2 != color {
                            continue;
                        }
                        let k = r * nt + t;
                        let tp = r * nt + (t + 1) % nt;
                        let tm = r * nt + (t + nt - 1) % nt;
                        let avg = (ar * (u[k - nt] + u[k + nt]) + at * (u[tp] + u[tm])) / diag;
                        let d = omega * (avg - u[k]);
                        u[k] += d;
                        delta = delta.max(d.abs());
                    }
                }
            }
            if delta < 1e-12 {
                break;
            }
        }
        Self { q, nr, nt, u }
    }

    /// Bilinear interpolation in `(rho, theta)`.
    pub fn value(&self, z: Complex64) -> f64 {
        let hr = -self.q.ln() / (self.nr - 1) as f64;
        let ht = 2.0 * std::f64::consts::PI / self.nt as f64;
        let fr = (z.norm().ln() - self.q.ln()) / hr;
        let ft = z.arg().rem_euclid(2.0 * std::f64::consts::PI) / ht;
        let r = (fr.floor() as usize).min(self.nr - 2);
        let t = ft.floor() as usize % self.nt;
        let (sr, st) = (fr - r as f64, ft - ft.floor());
        let u = |r: usize, t: usize| self.u[r * self.nt + t % self.nt];
        (1.0 - sr) * (1.0 - st) * u(r, t)
            + sr * (1.0 - st) * u(r + 1, t)
            + (1.0 - sr) * st * u(r, t + 1)
            + sr * st * u(r + 1, t + 1)
    }
}
