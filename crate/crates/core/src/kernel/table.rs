//! Tabulated radial profile of a fractional heat kernel in the self-similar
//! variable r = |x| t^{-1/θ}, with a persisted text format.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::stable;
use crate::error::{Error, Result};
use crate::integrate::gauss_legendre;
use crate::special::{ln_gamma, sphere_area};

pub const TABLE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialKernelTable {
    pub version: u32,
    pub theta: f64,
    pub dim: usize,
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
    pub tail_exponent: f64,
    pub build_tolerance: f64,
    /// Length scale ℓ of the node map r = ℓ sinh(s); interpolation is uniform in s.
    #[serde(default = "unit")]
    pub node_scale: f64,
    #[serde(skip)]
    interp: Interp,
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, Default)]
struct Interp {
    s: Vec<f64>,
    lg: Vec<f64>,
    m: Vec<f64>,
    tail: Vec<(f64, f64)>,
    tail_scale: f64,
}

impl PartialEq for RadialKernelTable {
    fn eq(&self, o: &Self) -> bool {
        self.version == o.version
            && self.theta == o.theta
            && self.dim == o.dim
            && self.nodes == o.nodes
            && self.values == o.values
            && self.tail_exponent == o.tail_exponent
            && self.build_tolerance == o.build_tolerance
            && self.node_scale == o.node_scale
    }
}

/// Number of tail-series terms kept beyond the last node.
fn tail_terms(theta: f64, dim: usize, r_last: f64) -> Vec<(f64, f64)> {
    let (_, _, used) = stable::series_value(theta, dim, r_last);
    stable::tail_series(theta, dim, used.clamp(1, 60))
}

fn tail_sum(tail: &[(f64, f64)], r: f64) -> (f64, f64) {
    let lr = r.ln();
    let (mut v, mut d) = (0.0, 0.0);
    for &(e, c) in tail {
        let t = c * (-e * lr).exp();
        v += t;
        d -= e * t / r;
    }
    (v, d)
}

impl RadialKernelTable {
    /// Assemble a table from raw parts, rebuilding the interpolant.
    pub fn from_parts(
        theta: f64,
        dim: usize,
        nodes: Vec<f64>,
        values: Vec<f64>,
        node_scale: f64,
        build_tolerance: f64,
    ) -> Result<Self> {
        let mut t = RadialKernelTable {
            version: TABLE_FORMAT_VERSION,
            theta,
            dim,
            nodes,
            values,
            tail_exponent: dim as f64 + theta,
            build_tolerance,
            node_scale,
            interp: Interp::default(),
        };
        t.rebuild()?;
        Ok(t)
    }

    fn rebuild(&mut self) -> Result<()> {
        let n = self.nodes.len();
        if n < 4 || n != self.values.len() {
            return Err(Error::Format("table needs at least 4 matching nodes and values".into()));
        }
        if !(self.theta > 0.0 && self.theta < 2.0) || !(1..=3).contains(&self.dim) || !(self.node_scale > 0.0) {
            return Err(Error::Format("table parameters out of range".into()));
        }
        if self.nodes[0] != 0.0 || self.nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Format("table nodes must start at 0 and increase".into()));
        }
        if self.values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::Format("table values must be positive".into()));
        }
        let l = self.node_scale;
        let s: Vec<f64> = self.nodes.iter().map(|r| (r / l).asinh()).collect();
        let lg: Vec<f64> = self.values.iter().map(|v| v.ln()).collect();
        let r_last = self.nodes[n - 1];
        let tail = tail_terms(self.theta, self.dim, r_last);
        let (tv, td) = tail_sum(&tail, r_last);
        if !(tv > 0.0) {
            return Err(Error::Format("tail series not positive at last node".into()));
        }
        let tail_scale = self.values[n - 1] / tv;
        let end_slope = td / tv * (l * l + r_last * r_last).sqrt();
        let m = clamped_spline(&s, &lg, 0.0, end_slope);
        self.interp = Interp { s, lg, m, tail, tail_scale };
        Ok(())
    }

    /// Profile g_θ(r).
    pub fn profile(&self, r: f64) -> f64 {
        let r = r.abs();
        let ip = &self.interp;
        let n = ip.s.len();
        let r_last = self.nodes[n - 1];
        if r > r_last {
            return ip.tail_scale * tail_sum(&ip.tail, r).0;
        }
        let s = (r / self.node_scale).asinh();
        let mut i = match ip.s.binary_search_by(|v| v.total_cmp(&s)) {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        };
        if i >= n - 1 {
            i = n - 2;
        }
        let h = ip.s[i + 1] - ip.s[i];
        let a = (ip.s[i + 1] - s) / h;
        let b = 1.0 - a;
        let y = a * ip.lg[i] + b * ip.lg[i + 1] + ((a * a * a - a) * ip.m[i] + (b * b * b - b) * ip.m[i + 1]) * h * h / 6.0;
        y.exp()
    }

    /// Kernel value G_θ at distance r and time t.
    pub fn kernel(&self, r: f64, t: f64) -> f64 {
        let scale = t.powf(-1.0 / self.theta);
        scale.powi(self.dim as i32) * self.profile(r * scale)
    }

    /// ∫_{R^N} G_θ(x, 1) dx computed from the interpolant and the analytic tail.
    pub fn mass(&self) -> f64 {
        let gl = gauss_legendre(8);
        let nd = self.dim as i32;
        let ip = &self.interp;
        let mut core = 0.0;
        let l = self.node_scale;
        for w in ip.s.windows(2) {
            core += gl.integrate(w[0], w[1], |s| {
                let r = l * s.sinh();
                r.powi(nd - 1) * self.profile(r) * l * s.cosh()
            });
        }
        let r_last = *self.nodes.last().unwrap();
        let tail: f64 = ip
            .tail
            .iter()
            .map(|&(e, c)| {
                let k_theta = e - self.dim as f64;
                c * r_last.powf(-k_theta) / k_theta
            })
            .sum::<f64>()
            * ip.tail_scale;
        sphere_area(self.dim) * (core + tail)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut t: RadialKernelTable = serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))?;
        if t.version != TABLE_FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported table version {}", t.version)));
        }
        if (t.tail_exponent - (t.dim as f64 + t.theta)).abs() > 1e-12 {
            return Err(Error::Format("tail exponent does not match N + θ".into()));
        }
        t.rebuild()?;
        Ok(t)
    }
}

/// Second derivatives of the cubic spline through (x, y) with prescribed end slopes.
pub(crate) fn clamped_spline(x: &[f64], y: &[f64], d0: f64, dn: f64) -> Vec<f64> {
    let n = x.len();
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    let mut c = vec![0.0; n];
    let mut r = vec![0.0; n];
    let h0 = x[1] - x[0];
    b[0] = h0 / 3.0;
    c[0] = h0 / 6.0;
    r[0] = (y[1] - y[0]) / h0 - d0;
    for i in 1..n - 1 {
        let hl = x[i] - x[i - 1];
        let hr = x[i + 1] - x[i];
        a[i] = hl / 6.0;
        b[i] = (hl + hr) / 3.0;
        c[i] = hr / 6.0;
        r[i] = (y[i + 1] - y[i]) / hr - (y[i] - y[i - 1]) / hl;
    }
    let hn = x[n - 1] - x[n - 2];
    a[n - 1] = hn / 6.0;
    b[n - 1] = hn / 3.0;
    r[n - 1] = dn - (y[n - 1] - y[n - 2]) / hn;
    // Thomas algorithm.
    for i in 1..n {
        let w = a[i] / b[i - 1];
        b[i] -= w * c[i - 1];
        r[i] -= w * r[i - 1];
    }
    let mut m = vec![0.0; n];
    m[n - 1] = r[n - 1] / b[n - 1];
    for i in (0..n - 1).rev() {
        m[i] = (r[i] - c[i] * m[i + 1]) / b[i];
    }
    m
}

/// Tabulate the θ-stable radial profile in dimension `dim` on `resolution`
/// nodes uniform in asinh(r) over [0, rmax].
pub fn build_fractional_table(theta: f64, dim: usize, resolution: usize, rmax: f64) -> Result<RadialKernelTable> {
    if !(theta > 0.0 && theta < 2.0) {
        return Err(Error::param(format!("theta must lie in (0,2), got {theta}")));
    }
    if !(1..=3).contains(&dim) {
        return Err(Error::param(format!("dimension must be 1, 2 or 3, got {dim}")));
    }
    if resolution < 64 {
        return Err(Error::param("resolution must be at least 64"));
    }
    if !(rmax > 1.0) || !rmax.is_finite() {
        return Err(Error::param("rmax must exceed 1"));
    }
    // Node density follows the curvature scale of the profile at the origin,
    // sqrt(g(0)/|g''(0)|) up to a constant, which shrinks quickly as θ → 0.
    let nf = dim as f64;
    let l = (0.5 * (ln_gamma(nf / theta) - ln_gamma((nf + 2.0) / theta))).exp().min(1.0);
    let smax = (rmax / l).asinh();
    let nodes: Vec<f64> = (0..resolution)
        .map(|i| match i {
            0 => 0.0,
            _ if i == resolution - 1 => rmax,
            _ => l * (smax * i as f64 / (resolution - 1) as f64).sinh(),
        })
        .collect();
    let values = if theta <= 1.0 {
        series_or(theta, dim, &nodes, |rs| stable::subordination_profile(theta, dim, rs))
    } else {
        fourier_values(theta, dim, &nodes)
    };
    if values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Budget { value: f64::NAN, error: f64::INFINITY });
    }
    let mut table = RadialKernelTable::from_parts(theta, dim, nodes, values, l, 0.0)?;
    let mass_err = (table.mass() - 1.0).abs();
    table.build_tolerance = mass_err;
    if mass_err > 1e-6 {
        return Err(Error::Budget { value: 1.0 + mass_err, error: mass_err });
    }
    Ok(table)
}

fn series_or<F: Fn(&[f64]) -> Vec<f64>>(theta: f64, dim: usize, nodes: &[f64], numeric: F) -> Vec<f64> {
    let mut out = vec![0.0; nodes.len()];
    let mut pending = Vec::new();
    for (i, &r) in nodes.iter().enumerate() {
        let usable = r > 0.0 && (theta < 1.0 || r > 1.5);
        let (v, e, _) = if usable { stable::series_value(theta, dim, r) } else { (0.0, f64::INFINITY, 0) };
        if e < 1e-13 && v > 0.0 {
            out[i] = v;
        } else {
            pending.push(i);
        }
    }
    let rs: Vec<f64> = pending.iter().map(|&i| nodes[i]).collect();
    for (k, v) in pending.iter().zip(numeric(&rs)) {
        out[*k] = v;
    }
    out
}

fn fourier_values(theta: f64, dim: usize, nodes: &[f64]) -> Vec<f64> {
    // Quadrature until the asymptotic series has been seen to agree with it on
    // several consecutive nodes; the series alone misses exponentially small
    // terms at moderate r, so it is never trusted before that.
    let mut out = Vec::with_capacity(nodes.len());
    let mut agree = 0;
    for &r in nodes {
        if agree >= 3 {
            let (v, e, _) = stable::series_value(theta, dim, r);
            if e < 1e-13 && v > 0.0 {
                out.push(v);
                continue;
            }
        }
        let f = stable::fourier_profile(theta, dim, r);
        if r > 1.0 {
            let (v, e, _) = stable::series_value(theta, dim, r);
            if e < 1e-13 && (v - f).abs() < 1e-9 * f {
                agree += 1;
            } else {
                agree = 0;
            }
        }
        out.push(f);
    }
    out
}
