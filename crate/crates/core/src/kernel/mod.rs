//! Gaussian and fractional heat kernels.

mod stable;
mod table;

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{adaptive, adaptive_to_infinity_graded, Tolerance};
use crate::special::{bessel_i0_scaled, sphere_area};

pub use stable::{fourier_profile, origin_value, series_value, subordination_profile, subordinator_density, tail_series};
pub use table::{build_fractional_table, RadialKernelTable, TABLE_FORMAT_VERSION};
pub(crate) use table::clamped_spline;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Operator {
    Laplacian,
    Fractional { theta: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelSpec {
    pub dim: usize,
    pub operator: Operator,
    #[serde(skip)]
    pub table: Option<Arc<RadialKernelTable>>,
}

impl PartialEq for KernelSpec {
    fn eq(&self, o: &Self) -> bool {
        self.dim == o.dim && self.operator == o.operator
    }
}

impl KernelSpec {
    pub fn gaussian(dim: usize) -> Self {
        KernelSpec { dim, operator: Operator::Laplacian, table: None }
    }

    /// Fractional kernel. A table is required unless θ = 1.
    pub fn fractional(dim: usize, theta: f64, table: Option<Arc<RadialKernelTable>>) -> Result<Self> {
        let k = KernelSpec { dim, operator: Operator::Fractional { theta }, table };
        k.validate()?;
        Ok(k)
    }

    /// Fractional kernel with a freshly built default table (512 nodes, rmax 100).
    pub fn fractional_built(dim: usize, theta: f64) -> Result<Self> {
        let table = if theta == 1.0 { None } else { Some(Arc::new(build_fractional_table(theta, dim, 512, 100.0)?)) };
        Self::fractional(dim, theta, table)
    }

    /// Diffusion order θ (2 for the Laplacian).
    pub fn theta(&self) -> f64 {
        match self.operator {
            Operator::Laplacian => 2.0,
            Operator::Fractional { theta } => theta,
        }
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self.operator, Operator::Laplacian)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dim) {
            return Err(Error::param(format!("dimension must be 1, 2 or 3, got {}", self.dim)));
        }
        if let Operator::Fractional { theta } = self.operator {
            if !(theta > 0.0 && theta < 2.0) {
                return Err(Error::param(format!("theta must lie in (0,2), got {theta}")));
            }
            if theta != 1.0 {
                let Some(t) = &self.table else {
                    return Err(Error::param(format!("fractional kernel with theta = {theta} needs a table")));
                };
                if t.dim != self.dim || t.theta != theta {
                    return Err(Error::param("kernel table does not match (dim, theta)"));
                }
            }
        }
        Ok(())
    }

    /// Kernel as a function of distance r = |x| and time t > 0.
    #[inline]
    pub fn radial(&self, r: f64, t: f64) -> f64 {
        match self.operator {
            Operator::Laplacian => gaussian(self.dim, r, t),
            Operator::Fractional { theta } => {
                if theta == 1.0 {
                    poisson(self.dim, r, t)
                } else {
                    self.table.as_ref().expect("validated table").kernel(r, t)
                }
            }
        }
    }

    /// Average of G(x - y, t) over the sphere |y| = ρ, where |x| = r.
    pub fn sphere_average(&self, r: f64, rho: f64, t: f64) -> f64 {
        match (self.operator, self.dim) {
            (Operator::Laplacian, _) => gaussian_sphere_average(self.dim, r, rho, t),
            (_, 1) => 0.5 * (self.radial(r - rho, t) + self.radial(r + rho, t)),
            (_, n) => {
                let (a, b) = (r * r + rho * rho, 2.0 * r * rho);
                if b == 0.0 {
                    return self.radial(a.sqrt(), t);
                }
                let tol = Tolerance::new(1e-11, 0.0, 400);
                if n == 3 {
                    0.5 * adaptive(|mu: f64| self.radial((a - b * mu).max(0.0).sqrt(), t), &[-1.0, 0.0, 1.0], tol).value
                } else {
                    adaptive(|phi: f64| self.radial((a - b * phi.cos()).max(0.0).sqrt(), t), &[0.0, 0.5 * PI, PI], tol).value
                        / PI
                }
            }
        }
    }

    /// Length scale t^{1/θ} of the kernel at time t.
    pub fn scale(&self, t: f64) -> f64 {
        t.powf(1.0 / self.theta())
    }
}

/// Gaussian heat kernel (4πt)^{-N/2} e^{-r²/4t}.
#[inline]
pub fn gaussian(dim: usize, r: f64, t: f64) -> f64 {
    let pre = match dim {
        1 => 1.0 / (4.0 * PI * t).sqrt(),
        2 => 1.0 / (4.0 * PI * t),
        _ => (4.0 * PI * t).powf(-(dim as f64) / 2.0),
    };
    pre * (-r * r / (4.0 * t)).exp()
}

/// Poisson kernel (θ = 1) in closed form.
pub fn poisson(dim: usize, r: f64, t: f64) -> f64 {
    let nf = dim as f64;
    let c = crate::special::gamma((nf + 1.0) / 2.0) / PI.powf((nf + 1.0) / 2.0);
    c * t / (t * t + r * r).powf((nf + 1.0) / 2.0)
}

/// Closed-form sphere average of the Gaussian kernel.
pub fn gaussian_sphere_average(dim: usize, r: f64, rho: f64, t: f64) -> f64 {
    match dim {
        1 => 0.5 * (gaussian(1, r - rho, t) + gaussian(1, r + rho, t)),
        2 => {
            let d = r - rho;
            (-d * d / (4.0 * t)).exp() / (4.0 * PI * t) * bessel_i0_scaled(r * rho / (2.0 * t))
        }
        _ => {
            let d = r - rho;
            let z = r * rho / (2.0 * t);
            let shape = if z < 1e-8 { 1.0 - z } else { -(-2.0 * z).exp_m1() / (2.0 * z) };
            (4.0 * PI * t).powf(-1.5) * (-d * d / (4.0 * t)).exp() * shape
        }
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Kernel value G(x, t).
pub fn eval_kernel(k: &KernelSpec, x: &[f64], t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::param(format!("kernel time must be positive, got {t}")));
    }
    if x.len() != k.dim {
        return Err(Error::param("point dimension does not match kernel"));
    }
    k.validate()?;
    Ok(k.radial(norm(x), t))
}

/// Both sides of the Gaussian product identity
/// G(x−y,t−s)G(y−η,s) = G(x−η,t)G(y−(s/t)x−((t−s)/t)η, s(t−s)/t).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub rel_error: f64,
}

pub fn kernel_product_identity(dim: usize, x: &[f64], y: &[f64], eta: &[f64], s: f64, t: f64) -> Result<IdentityCheck> {
    if !(s > 0.0 && s < t) {
        return Err(Error::param(format!("need 0 < s < t, got s = {s}, t = {t}")));
    }
    if x.len() != dim || y.len() != dim || eta.len() != dim {
        return Err(Error::param("point dimension mismatch"));
    }
    let diff = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt() };
    let lhs = gaussian(dim, diff(x, y), t - s) * gaussian(dim, diff(y, eta), s);
    let mid: Vec<f64> = (0..dim).map(|i| y[i] - (s / t) * x[i] - ((t - s) / t) * eta[i]).collect();
    let rhs = gaussian(dim, diff(x, eta), t) * gaussian(dim, norm(&mid), s * (t - s) / t);
    let rel_error = if lhs == rhs { 0.0 } else { (lhs - rhs).abs() / lhs.abs().max(rhs.abs()) };
    Ok(IdentityCheck { lhs, rhs, rel_error })
}

/// Radial integral ∫_{R^N} G(x - y, t) φ(|y|) dy through sphere averages.
pub(crate) fn radial_convolution<F: Fn(f64) -> f64>(k: &KernelSpec, r: f64, t: f64, phi: F, extra: &[f64], tol: Tolerance) -> f64 {
    let n = k.dim;
    let sc = k.scale(t);
    let mut pts = vec![0.0, r];
    for m in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0] {
        pts.push(r + m * sc);
        if r - m * sc > 0.0 {
            pts.push(r - m * sc);
        }
    }
    pts.extend(extra.iter().copied().filter(|v| *v > 0.0));
    let f = |rho: f64| {
        let w = phi(rho);
        if w == 0.0 {
            0.0
        } else {
            rho.powi(n as i32 - 1) * k.sphere_average(r, rho, t) * w
        }
    };
    let area = sphere_area(n);
    let v = if k.is_gaussian() {
        let top = r + 40.0 * sc;
        let mut p: Vec<f64> = pts.into_iter().filter(|v| *v <= top).collect();
        p.push(top);
        adaptive(f, &p, tol).value
    } else {
        let top = pts.iter().cloned().fold(0.0, f64::max);
        let mut p = pts.clone();
        p.push(top);
        let q = (2.0 / k.theta()).max(1.0);
        adaptive(&f, &p, tol).value + adaptive_to_infinity_graded(&f, top, top, q, &[2.0 * top, 10.0 * top], tol).value
    };
    area * v
}

/// Maximum deviations found by [`kernel_selfchecks`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelfCheckReport {
    pub samples: usize,
    pub normalization: f64,
    pub symmetry: f64,
    pub semigroup: f64,
}

/// Sampled checks of normalisation, symmetry and the semigroup property.
pub fn kernel_selfchecks(k: &KernelSpec, samples: usize, seed: u64) -> Result<SelfCheckReport> {
    k.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tol = Tolerance::new(1e-12, 0.0, 4000);
    let mut rep = SelfCheckReport { samples, normalization: 0.0, symmetry: 0.0, semigroup: 0.0 };
    for _ in 0..samples {
        let t = 10f64.powf(rng.random_range(-2.0..2.0));
        let s = 10f64.powf(rng.random_range(-2.0..2.0));
        let x: Vec<f64> = (0..k.dim).map(|_| rng.random_range(-3.0..3.0) * k.scale(t)).collect();
        let r = norm(&x);
        let mass = radial_convolution(k, r, t, |_| 1.0, &[], tol);
        rep.normalization = rep.normalization.max((mass - 1.0).abs());
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let (a, b) = (eval_kernel(k, &x, t)?, eval_kernel(k, &neg, t)?);
        rep.symmetry = rep.symmetry.max((a - b).abs() / a);
        let lhs = k.radial(r, t + s);
        let rhs = radial_convolution(k, r, t, |rho| k.radial(rho, s), &[k.scale(s)], tol);
        rep.semigroup = rep.semigroup.max((lhs - rhs).abs() / lhs);
    }
    Ok(rep)
}

/// Absolute deviation of G(0, t+s) from the convolution ∫G(−y,t)G(y,s)dy.
pub fn semigroup_at_origin(k: &KernelSpec, t: f64, s: f64) -> f64 {
    let tol = Tolerance::new(1e-12, 0.0, 4000);
    let conv = radial_convolution(k, 0.0, t, |rho| k.radial(rho, s), &[k.scale(s)], tol);
    (conv - k.radial(0.0, t + s)).abs()
}
