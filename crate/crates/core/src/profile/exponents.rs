use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalExponents {
    pub p_f: f64,
    pub p_gamma: f64,
}

/// p_F = 1 + θ/N and p_γ = 1 + (θ−γ)/N.
pub fn critical_exponents(n: usize, gamma: f64, theta: f64) -> Result<CriticalExponents> {
    let nf = n as f64;
    if !(gamma > 0.0 && gamma < theta.min(nf)) {
        return Err(Error::param(format!("gamma must lie in (0, min(theta, N)), got {gamma}")));
    }
    Ok(CriticalExponents { p_f: 1.0 + theta / nf, p_gamma: 1.0 + (theta - gamma) / nf })
}

/// Relative tolerance used when deciding whether p sits exactly on a
/// critical exponent.
pub const CRITICAL_TOL: f64 = 1e-12;

pub fn is_critical(p: f64, pc: f64) -> bool {
    (p - pc).abs() <= CRITICAL_TOL * pc
}

/// Amplitude weight ψ(z).
pub fn psi_weight(z: &[f64], n: usize, p: f64, gamma: f64, theta: f64) -> f64 {
    let nf = n as f64;
    let r = z.iter().map(|v| v * v).sum::<f64>().sqrt();
    let p_f = 1.0 + theta / nf;
    let first = p < p_f && !is_critical(p, p_f) || is_critical(p, p_f) && nf <= theta;
    if first {
        r.powf(theta / (p - 1.0)) * (1.0 + r).powf(-(theta - gamma) / (p - 1.0))
    } else {
        r.powf(gamma / (p - 1.0))
    }
}
