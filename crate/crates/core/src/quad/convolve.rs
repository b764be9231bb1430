//! Heat convolution of singular profiles by radial reduction about each
//! term's center.

use std::f64::consts::E;

use crate::error::{Error, Result};
use crate::integrate::{adaptive, adaptive_to_infinity_graded, Estimate, Tolerance};
use crate::kernel::KernelSpec;
use crate::profile::{SingularProfile, TermKind};
use crate::special::sphere_area;

use super::QuadSpec;

const MULT: [f64; 6] = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0];

/// |S^{N−1}| ∫_lo^hi ρ^{N−1} A(r, ρ, t) φ(ρ) dρ, with A the sphere average of
/// the kernel; hi may be infinite.
fn outer(k: &KernelSpec, r: f64, t: f64, lo: f64, hi: f64, phi: &dyn Fn(f64) -> f64, extra: &[f64], tol: Tolerance) -> Estimate {
    let sc = k.scale(t);
    let n = k.dim as i32;
    let f = |rho: f64| {
        let w = phi(rho);
        if w == 0.0 {
            0.0
        } else {
            rho.powi(n - 1) * k.sphere_average(r, rho, t) * w
        }
    };
    let mut pts = vec![lo, r];
    for m in MULT {
        pts.push(r + m * sc);
        pts.push(r - m * sc);
    }
    pts.extend_from_slice(extra);
    let top = if k.is_gaussian() { hi.min(r + 40.0 * sc) } else { hi };
    if top <= lo {
        return Estimate::zero();
    }
    let est = if top.is_finite() {
        pts.push(top);
        pts.retain(|v| *v >= lo && *v <= top);
        adaptive(f, &pts, tol)
    } else {
        pts.retain(|v| *v >= lo);
        let last = pts.iter().cloned().fold(lo, f64::max).max(lo + sc);
        pts.push(last);
        let q = (2.0 / k.theta()).max(1.0);
        adaptive(f, &pts, tol).add(adaptive_to_infinity_graded(f, last, last, q, &[2.0 * last, 10.0 * last], tol))
    };
    est.scale(sphere_area(k.dim))
}

/// ∫_{R^N} G(x − y, t) ρ^{−a} g(ρ) 1{ρ ≤ R} dy with ρ = |y| and |x| = r,
/// for a < N and g regular at 0.
pub(crate) fn radial_power(
    k: &KernelSpec,
    r: f64,
    t: f64,
    a: f64,
    support: f64,
    g: &dyn Fn(f64) -> f64,
    extra: &[f64],
    tol: Tolerance,
) -> Estimate {
    let nf = k.dim as f64;
    let e = nf - a;
    let rho1 = k.scale(t).min(support);
    // ρ = ρ1 v^{1/e} absorbs ρ^{N−1−a} exactly.
    let inner = adaptive(
        |v: f64| {
            let rho = rho1 * v.powf(1.0 / e);
            k.sphere_average(r, rho, t) * g(rho)
        },
        &[0.0, 0.5, 1.0],
        tol,
    )
    .scale(rho1.powf(e) / e * sphere_area(k.dim));
    let phi = |rho: f64| rho.powf(-a) * g(rho);
    inner.add(outer(k, r, t, rho1, support, &phi, extra, tol))
}

/// Same integral for densities with a logarithmic correction at 0, written
/// in λ = ln(1/ρ). `lam(λ)` is ρ^N φ(ρ) at ρ = e^{−λ} and decays at least
/// like λ^{−decay}; `phi` is φ itself on [ρ1, R].
pub(crate) fn radial_log(
    k: &KernelSpec,
    r: f64,
    t: f64,
    lam: &dyn Fn(f64) -> f64,
    decay: f64,
    phi: &dyn Fn(f64) -> f64,
    support: f64,
    extra: &[f64],
    tol: Tolerance,
) -> Estimate {
    let rho1 = k.scale(t).min(support).min(0.5);
    let l1 = -rho1.ln();
    let q = if decay.is_finite() { (1.5 / (decay - 1.0)).max(1.0) } else { 1.0 };
    let inner = adaptive_to_infinity_graded(
        |l: f64| {
            let v = lam(l);
            if v == 0.0 {
                0.0
            } else {
                k.sphere_average(r, (-l).exp(), t) * v
            }
        },
        l1,
        l1.max(1.0),
        q,
        &[2.0 * l1 + 1.0, 10.0 * l1 + 10.0],
        tol,
    )
    .scale(sphere_area(k.dim));
    inner.add(outer(k, r, t, rho1, support, phi, extra, tol))
}

/// ln(e + e^λ), stable for large λ.
#[inline]
pub(crate) fn log_e_plus_exp(l: f64) -> f64 {
    if l > 1.0 {
        l + (1.0 + (1.0 - l).exp()).ln()
    } else {
        (E + l.exp()).ln()
    }
}

fn distance(x: &[f64], c: &[f64]) -> f64 {
    if c.is_empty() {
        return 0.0;
    }
    x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Value and error estimate of ∫ G(x − y, t) du0(y).
pub fn heat_convolve_estimate(k: &KernelSpec, u0: &SingularProfile, x: &[f64], t: f64, q: &QuadSpec) -> Result<Estimate> {
    k.validate()?;
    u0.validate(k.dim)?;
    q.validate()?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::param(format!("time must be positive, got {t}")));
    }
    if x.len() != k.dim {
        return Err(Error::param(format!("point has dimension {}, kernel has {}", x.len(), k.dim)));
    }
    let tol = q.tolerance();
    let mut total = Estimate::zero();
    for term in &u0.terms {
        if term.amplitude == 0.0 {
            continue;
        }
        let r = distance(x, &term.center);
        let extra: Vec<f64> = q.singular_points.iter().filter(|p| p.len() == k.dim).map(|p| distance(p, &term.center)).collect();
        let nf = k.dim as f64;
        let est = match term.kind {
            TermKind::Constant => Estimate { value: 1.0, error: 0.0, evals: 0, converged: true },
            TermKind::Dirac => Estimate { value: k.radial(r, t), error: 0.0, evals: 1, converged: true },
            TermKind::Power { a } => radial_power(k, r, t, a, f64::INFINITY, &|_| 1.0, &extra, tol),
            TermKind::Logpower { a, k: kk, cutoff } => {
                let lam = |l: f64| (-(nf - a) * l).exp() * log_e_plus_exp(l).powf(-kk);
                let phi = |rho: f64| if rho > cutoff { 0.0 } else { rho.powf(-a) * (E + 1.0 / rho).ln().powf(-kk) };
                let decay = if a < nf { f64::INFINITY } else { kk };
                radial_log(k, r, t, &lam, decay, &phi, cutoff, &extra, tol)
            }
        };
        total = total.add(est.scale(term.amplitude));
    }
    total.converged = total.error <= tol.abs.max(tol.rel * total.value.abs());
    Ok(total)
}

/// ∫ G(x − y, t) du0(y): Dirac terms contribute amplitude·G(x − z, t) and
/// constants their value; power and log-corrected terms by adaptive
/// quadrature. Fails with [`Error::Budget`] when the tolerance is missed.
pub fn heat_convolve(k: &KernelSpec, u0: &SingularProfile, x: &[f64], t: f64, q: &QuadSpec) -> Result<f64> {
    let est = heat_convolve_estimate(k, u0, x, t, q)?;
    if !est.converged || !est.value.is_finite() {
        return Err(Error::Budget { value: est.value, error: est.error });
    }
    Ok(est.value)
}
