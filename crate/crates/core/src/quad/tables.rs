//! Interpolation tables behind the fast envelope and template evaluators.

use crate::integrate::Tolerance;
use crate::kernel::{clamped_spline, KernelSpec};
use crate::special::power_heat_profile;

use super::convolve::radial_power;

const TAIL_TERMS: usize = 14;

/// Self-similar profile F(ξ) = ∫ G(ξe − w, 1) |w|^{−a} dw, so that the heat
/// evolution of |y|^{−a} is t^{−a/θ} F(|x| t^{−1/θ}).
#[derive(Debug, Clone)]
pub(crate) struct ProfileTable {
    a: f64,
    gaussian: bool,
    h: f64,
    xi_max: f64,
    lnf: Vec<f64>,
    m: Vec<f64>,
    /// Gaussian tail F(ξ) = ξ^{−a} Σ c_s (ξ²/4)^{−s}.
    tail_c: Vec<f64>,
}

impl ProfileTable {
    pub fn new(kernel: &KernelSpec, a: f64) -> Self {
        let gaussian = kernel.is_gaussian();
        let (xi_max, n): (f64, usize) = if gaussian { (16.0, 513) } else { (1e3, 769) };
        let umax = xi_max.asinh();
        let h = umax / (n - 1) as f64;
        let tol = Tolerance::new(1e-12, 0.0, 4000);
        let u: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
        let lnf: Vec<f64> = u
            .iter()
            .map(|&ui| {
                let xi = ui.sinh();
                let v = if gaussian {
                    power_heat_profile(a, kernel.dim, xi)
                } else {
                    radial_power(kernel, xi, 1.0, a, f64::INFINITY, &|_| 1.0, &[], tol).value
                };
                v.ln()
            })
            .collect();
        let dn = (3.0 * lnf[n - 1] - 4.0 * lnf[n - 2] + lnf[n - 3]) / (2.0 * h);
        let m = clamped_spline(&u, &lnf, 0.0, dn);
        let tail_c = if gaussian {
            // Large-argument expansion of Kummer's M(a/2, N/2, −ξ²/4).
            let (ah, nh) = (0.5 * a, 0.5 * kernel.dim as f64);
            let mut c = vec![1.0];
            for s in 0..TAIL_TERMS {
                let s = s as f64;
                let prev = c[c.len() - 1];
                c.push(prev * (ah + s) * (ah - nh + 1.0 + s) / (s + 1.0));
            }
            c
        } else {
            Vec::new()
        };
        ProfileTable { a, gaussian, h, xi_max, lnf, m, tail_c }
    }

    #[inline]
    pub fn eval(&self, xi: f64) -> f64 {
        if xi > self.xi_max {
            return if self.gaussian {
                let ix = 4.0 / (xi * xi);
                let sum = self.tail_c.iter().rev().fold(0.0, |acc, c| acc * ix + c);
                xi.powf(-self.a) * sum
            } else {
                self.lnf[self.lnf.len() - 1].exp() * (xi / self.xi_max).powf(-self.a)
            };
        }
        let u = xi.asinh();
        let n = self.lnf.len();
        let i = ((u / self.h) as usize).min(n - 2);
        let b = u / self.h - i as f64;
        let a = 1.0 - b;
        let y = a * self.lnf[i]
            + b * self.lnf[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * self.h * self.h / 6.0;
        y.exp()
    }
}

/// Positive function of (r, s) tabulated as ln f on a uniform (ln r, ln s)
/// grid with Catmull–Rom interpolation in both directions.
#[derive(Debug, Clone)]
pub(crate) struct LogLogTable {
    lr0: f64,
    hr: f64,
    nr: usize,
    ls0: f64,
    hs: f64,
    ns: usize,
    /// ln f with one ghost cell on each side, (nr + 2) × (ns + 2), row-major in s.
    v: Vec<f64>,
}

#[inline]
fn catmull(p0: f64, p1: f64, p2: f64, p3: f64, t: f64) -> f64 {
    0.5 * (2.0 * p1
        + (p2 - p0) * t
        + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t * t
        + (3.0 * (p1 - p2) + p3 - p0) * t * t * t)
}

impl LogLogTable {
    pub fn build<F: Fn(f64, f64) -> f64 + Sync>(r: (f64, f64, usize), s: (f64, f64, usize), f: F) -> Self {
        Self::build_ln(r, s, |r, s| f(r, s).max(1e-300).ln())
    }

    /// Table from ln f directly. Non-finite entries are filled by linear
    /// extrapolation in ln r from the last two finite entries of their row.
    pub fn build_ln<F: Fn(f64, f64) -> f64 + Sync>(r: (f64, f64, usize), s: (f64, f64, usize), lnf: F) -> Self {
        let (lr0, lr1) = (r.0.ln(), r.1.ln());
        let (ls0, ls1) = (s.0.ln(), s.1.ln());
        let hr = (lr1 - lr0) / (r.2 - 1) as f64;
        let hs = (ls1 - ls0) / (s.2 - 1) as f64;
        let (nr, ns) = (r.2, s.2);
        let mut v = crate::exec::Execution::Parallel.map(nr * ns, |k| {
            let (j, i) = (k / nr, k % nr);
            lnf((lr0 + i as f64 * hr).exp(), (ls0 + j as f64 * hs).exp())
        });
        for row in v.chunks_mut(nr) {
            for i in 0..nr {
                if !row[i].is_finite() {
                    row[i] = if i >= 2 { 2.0 * row[i - 1] - row[i - 2] } else { -690.0 };
                }
            }
        }
        // Ghost cells: linear extrapolation by one cell beyond each edge.
        let get = |i: isize, j: isize| v[(j as usize) * nr + i as usize];
        let (nri, nsi) = (nr as isize, ns as isize);
        let mut padded = Vec::with_capacity((nr + 2) * (ns + 2));
        for j in -1..=nsi {
            for i in -1..=nri {
                let ci = i.clamp(0, nri - 1);
                let cj = j.clamp(0, nsi - 1);
                let mut x = get(ci, cj);
                if i != ci {
                    x = 2.0 * x - get(if i < 0 { 1 } else { nri - 2 }, cj);
                }
                if j != cj {
                    x = 2.0 * x - get(ci, if j < 0 { 1 } else { nsi - 2 });
                }
                padded.push(x);
            }
        }
        LogLogTable { lr0, hr, nr, ls0, hs, ns, v: padded }
    }

    pub fn r_max(&self) -> f64 {
        (self.lr0 + (self.nr - 1) as f64 * self.hr).exp()
    }

    /// ln f(r, s), clamping (ln r, ln s) into the tabulated box.
    #[inline]
    pub fn eval_ln(&self, r: f64, s: f64) -> f64 {
        let x = ((r.max(1e-300).ln() - self.lr0) / self.hr).clamp(0.0, (self.nr - 1) as f64);
        let y = ((s.max(1e-300).ln() - self.ls0) / self.hs).clamp(0.0, (self.ns - 1) as f64);
        let i = (x as usize).min(self.nr - 2);
        let j = (y as usize).min(self.ns - 2);
        let (tx, ty) = (x - i as f64, y - j as f64);
        let w = self.nr + 2;
        // Padded index of cell (i − 1, j − 1) is (i, j).
        let mut rows = [0.0; 4];
        for (k, row) in rows.iter_mut().enumerate() {
            let b = (j + k) * w + i;
            let c = &self.v[b..b + 4];
            *row = catmull(c[0], c[1], c[2], c[3], tx);
        }
        catmull(rows[0], rows[1], rows[2], rows[3], ty)
    }

    /// f(r, s), clamping (ln r, ln s) into the tabulated box.
    pub fn eval(&self, r: f64, s: f64) -> f64 {
        self.eval_ln(r, s).exp()
    }
}

/// Heat evolution of a radial density supported in the ball of radius
/// `cutoff`. The jump at the cutoff sphere is resolved by three tables in
/// the log-distance to the nearest feature: ln r inside r ≤ cutoff/2,
/// ln(cutoff − r) up to the sphere and ln(r − cutoff) beyond it.
#[derive(Debug, Clone)]
pub(crate) struct CutTable {
    cutoff: f64,
    inner: LogLogTable,
    below: LogLogTable,
    above: LogLogTable,
    gaussian: bool,
    decay: f64,
}

const DMIN: f64 = 1e-12;

impl CutTable {
    /// `f(r, s)` is the exact evolution; `s` ranges over [s0, s1]; `reach`
    /// is the distance beyond the sphere covered by the table.
    pub fn build<F: Fn(f64, f64) -> f64 + Sync>(kernel: &KernelSpec, cutoff: f64, reach: f64, s: (f64, f64, usize), nr: usize, f: F) -> Self {
        let half = 0.5 * cutoff;
        let inner = LogLogTable::build((1e-9 * cutoff, half, nr), s, &f);
        let below = LogLogTable::build((DMIN * cutoff, half, nr), s, |d, t| f(cutoff - d, t));
        let gaussian = kernel.is_gaussian();
        // Beyond the sphere the Gaussian factor e^{−d²/4s} is divided out so
        // that the tabulated function stays smooth in ln d.
        let above = LogLogTable::build_ln((DMIN * cutoff, reach, nr), s, |d, t| {
            let v = f(cutoff + d, t);
            if !gaussian {
                v.max(1e-300).ln()
            } else if v > 1e-250 {
                v.ln() + d * d / (4.0 * t)
            } else {
                f64::NAN
            }
        });
        CutTable {
            cutoff,
            inner,
            below,
            above,
            gaussian,
            decay: kernel.dim as f64 + kernel.theta(),
        }
    }

    #[inline]
    pub fn eval(&self, r: f64, s: f64) -> f64 {
        let c = self.cutoff;
        if r <= 0.5 * c {
            self.inner.eval(r, s)
        } else if r <= c {
            self.below.eval((c - r).max(DMIN * c), s)
        } else {
            let d = r - c;
            let dmax = self.above.r_max();
            if self.gaussian {
                (self.above.eval_ln(d.clamp(DMIN * c, dmax), s) - d * d / (4.0 * s)).exp()
            } else if d <= dmax {
                self.above.eval(d.max(DMIN * c), s)
            } else {
                self.above.eval(dmax, s) * (r / (c + dmax)).powf(-self.decay)
            }
        }
    }
}
