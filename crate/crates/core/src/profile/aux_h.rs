use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use super::exponents::{critical_exponents, is_critical};
use crate::error::{Error, Result};

/// Which construction the auxiliary function serves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseP {
    SupercriticalFujita,
    CriticalFujita,
    SupercriticalHardy,
    CriticalHardy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum HCase {
    Power { alpha: f64 },
    Log { beta: f64, big_a: f64 },
}

/// H(X) = X^α, or H(X) = X (log(A+X))^β.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuxiliaryH {
    pub case: HCase,
    pub validated: bool,
}

/// Open admissible interval for α (power case) or β (log case).
pub fn admissible_range(case: CaseP, n: usize, p: f64, gamma: f64, theta: f64) -> (f64, f64) {
    let nf = n as f64;
    match case {
        CaseP::SupercriticalFujita => (1.0, p.min(nf * (p - 1.0) / theta)),
        CaseP::SupercriticalHardy => (1.0, p.min(nf * (p - 1.0) / (theta - gamma))),
        CaseP::CriticalFujita => (0.0, nf / theta),
        CaseP::CriticalHardy => (0.0, nf / (theta - gamma)),
    }
}

/// Number of points and range of the validation grid.
pub const GRID_POINTS: usize = 10_000;
pub const GRID_LOG10: (f64, f64) = (-8.0, 8.0);

pub fn validation_grid() -> Vec<f64> {
    let (lo, hi) = GRID_LOG10;
    (0..GRID_POINTS).map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (GRID_POINTS - 1) as f64)).collect()
}

impl AuxiliaryH {
    pub fn power(alpha: f64) -> Self {
        AuxiliaryH { case: HCase::Power { alpha }, validated: alpha > 1.0 }
    }

    /// Unvalidated log-case H with a given A.
    pub fn log(beta: f64, big_a: f64) -> Self {
        AuxiliaryH { case: HCase::Log { beta, big_a }, validated: false }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.case {
            HCase::Power { alpha } => x.powf(alpha),
            HCase::Log { beta, big_a } => x * (big_a + x).ln().powf(beta),
        }
    }

    /// ln H(X) for X > 0, safe for very large or small X.
    pub fn ln_eval(&self, x: f64) -> f64 {
        match self.case {
            HCase::Power { alpha } => alpha * x.ln(),
            HCase::Log { beta, big_a } => x.ln() + beta * ln_ln_shift(big_a, x),
        }
    }

    /// H^{-1}(Y): closed form in the power case, bisection with bracket
    /// doubling (in log X) in the log case.
    pub fn inverse(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        if !y.is_finite() {
            return f64::INFINITY;
        }
        match self.case {
            HCase::Power { alpha } => y.powf(1.0 / alpha),
            HCase::Log { beta, big_a } => {
                let ly = y.ln();
                let f = |lx: f64| lx + beta * ln_ln_shift(big_a, lx.exp()) - ly;
                let guess = ly - beta * ln_ln_shift(big_a, y);
                let (mut lo, mut hi) = (guess - 1.0, guess + 1.0);
                let mut step = 1.0;
                while f(lo) > 0.0 {
                    step *= 2.0;
                    lo -= step;
                }
                step = 1.0;
                while f(hi) < 0.0 {
                    step *= 2.0;
                    hi += step;
                }
                for _ in 0..200 {
                    let m = 0.5 * (lo + hi);
                    if f(m) < 0.0 {
                        lo = m;
                    } else {
                        hi = m;
                    }
                    if hi - lo <= 1e-15 * (1.0 + m.abs()) {
                        break;
                    }
                }
                (0.5 * (lo + hi)).exp()
            }
        }
    }

    pub fn big_a(&self) -> f64 {
        match self.case {
            HCase::Power { .. } => E,
            HCase::Log { big_a, .. } => big_a,
        }
    }
}

/// ln(ln(A + X)), accurate when X overflows exp-range arithmetic.
fn ln_ln_shift(a: f64, x: f64) -> f64 {
    let l = if x > 1e15 * a { x.ln() + (a / x).ln_1p() } else { (a + x).ln() };
    l.ln()
}

/// Minimum successive differences of the four maps of the monotonicity
/// conditions on the validation grid (ln-values; the first three must be
/// positive and the fourth negative).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub h_increasing: f64,
    pub xp_over_h_increasing: f64,
    pub h_over_x_increasing: f64,
    pub weight_decreasing: f64,
}

impl MonotonicityReport {
    pub fn holds(&self) -> bool {
        self.h_increasing > 0.0
            && self.xp_over_h_increasing > 0.0
            && self.h_over_x_increasing > 0.0
            && self.weight_decreasing < 0.0
    }
}

/// Evaluate the four monotonicity conditions for the log case on the grid.
pub fn monotonicity(beta: f64, big_a: f64, p: f64, gamma: f64, theta: f64) -> MonotonicityReport {
    let h = AuxiliaryH::log(beta, big_a);
    let grid = validation_grid();
    let maps = |x: f64| -> [f64; 4] {
        let lh = h.ln_eval(x);
        let lx = x.ln();
        // X^{-(θ−γ)} (log(A + 1/X))^{-1-β}
        let w = -(theta - gamma) * lx - (1.0 + beta) * ln_ln_shift(big_a, 1.0 / x);
        [lh, p * lx - lh, lh - lx, w]
    };
    let mut prev = maps(grid[0]);
    let mut rep = MonotonicityReport {
        h_increasing: f64::INFINITY,
        xp_over_h_increasing: f64::INFINITY,
        h_over_x_increasing: f64::INFINITY,
        weight_decreasing: f64::NEG_INFINITY,
    };
    for &x in &grid[1..] {
        let cur = maps(x);
        rep.h_increasing = rep.h_increasing.min(cur[0] - prev[0]);
        rep.xp_over_h_increasing = rep.xp_over_h_increasing.min(cur[1] - prev[1]);
        rep.h_over_x_increasing = rep.h_over_x_increasing.min(cur[2] - prev[2]);
        rep.weight_decreasing = rep.weight_decreasing.max(cur[3] - prev[3]);
        prev = cur;
    }
    rep
}

/// Smallest A in {e·2^j : j = 0..40} satisfying the four monotonicity
/// conditions on the validation grid, times a safety factor 2.
pub fn select_a_min(beta: f64, n: usize, p: f64, gamma: f64, theta: f64) -> Result<f64> {
    critical_exponents(n, gamma, theta)?;
    if !(beta > 0.0) {
        return Err(Error::param("beta must be positive"));
    }
    for j in 0..=40 {
        let a = E * 2f64.powi(j);
        if monotonicity(beta, a, p, gamma, theta).holds() {
            return Ok(2.0 * a);
        }
    }
    Err(Error::param(format!("no A up to e*2^40 validates beta = {beta}")))
}

/// Build H for the given case. Unspecified exponents default to the midpoint
/// of the admissible interval; the log case selects and validates A.
pub fn build_aux_h(
    n: usize,
    p: f64,
    gamma: f64,
    theta: f64,
    case: CaseP,
    alpha: Option<f64>,
    beta: Option<f64>,
) -> Result<AuxiliaryH> {
    let ce = critical_exponents(n, gamma, theta)?;
    let consistent = match case {
        CaseP::SupercriticalFujita => p > ce.p_f && !is_critical(p, ce.p_f),
        CaseP::CriticalFujita => is_critical(p, ce.p_f),
        CaseP::SupercriticalHardy => p > ce.p_gamma && !is_critical(p, ce.p_gamma),
        CaseP::CriticalHardy => is_critical(p, ce.p_gamma),
    };
    if !consistent {
        return Err(Error::param(format!("p = {p} is inconsistent with case {case:?}")));
    }
    let (lo, hi) = admissible_range(case, n, p, gamma, theta);
    if !(hi > lo) {
        return Err(Error::param(format!("empty admissible range ({lo}, {hi}) for {case:?}")));
    }
    let pick = |v: Option<f64>| -> Result<f64> {
        let v = v.unwrap_or(0.5 * (lo + hi));
        if v > lo && v < hi {
            Ok(v)
        } else {
            Err(Error::param(format!("exponent {v} outside admissible range ({lo}, {hi})")))
        }
    };
    match case {
        CaseP::SupercriticalFujita | CaseP::SupercriticalHardy => Ok(AuxiliaryH::power(pick(alpha)?)),
        CaseP::CriticalFujita | CaseP::CriticalHardy => {
            let beta = pick(beta)?;
            let big_a = select_a_min(beta, n, p, gamma, theta)?;
            Ok(AuxiliaryH { case: HCase::Log { beta, big_a }, validated: true })
        }
    }
}

/// sup over the validation grid of H^{-1}(X) (log(A+X))^β / X, the constant
/// in the log-case upper bound for H^{-1}.
pub fn inverse_bound_constant(h: &AuxiliaryH) -> f64 {
    match h.case {
        HCase::Power { .. } => 1.0,
        HCase::Log { beta, big_a } => validation_grid()
            .into_iter()
            .map(|x| h.inverse(x) * (big_a + x).ln().powf(beta) / x)
            .fold(0.0, f64::max),
    }
}

/// Minimum of the second divided differences of H over the validation grid.
pub fn min_second_difference(h: &AuxiliaryH) -> f64 {
    let g = validation_grid();
    let v: Vec<f64> = g.iter().map(|x| h.eval(*x)).collect();
    let mut worst = f64::INFINITY;
    for i in 1..g.len() - 1 {
        let d1 = (v[i] - v[i - 1]) / (g[i] - g[i - 1]);
        let d2 = (v[i + 1] - v[i]) / (g[i + 1] - g[i]);
        // Relative to the slope scale so the sign test is meaningful in
        // floating point.
        let d = (d2 - d1) / d2.abs().max(d1.abs());
        worst = worst.min(d);
    }
    worst
}
