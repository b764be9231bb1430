//! Radial profiles g_θ of isotropic θ-stable densities in R^N, i.e. the
//! fractional heat kernel at t = 1, normalised so that its Fourier transform
//! is e^{-|ξ|^θ}.

use std::f64::consts::PI;

use crate::integrate::{adaptive, gauss_legendre, Tolerance};
use crate::special::{bessel_j0, gamma, ln_gamma};

/// Coefficients (exponent, coefficient) of the large-r expansion
/// g(r) = Σ c_k r^{-(kθ+N)}. Convergent for θ < 1 (and θ = 1, r > 1),
/// asymptotic for θ > 1.
pub fn tail_series(theta: f64, n: usize, kmax: usize) -> Vec<(f64, f64)> {
    let nf = n as f64;
    let lpi = -(nf / 2.0 + 1.0) * PI.ln();
    (1..=kmax)
        .map(|k| {
            let kf = k as f64;
            let sgn = if k % 2 == 1 { 1.0 } else { -1.0 };
            let s = (kf * PI * theta / 2.0).sin();
            let lmag = lpi - ln_gamma(kf + 1.0)
                + kf * theta * 2f64.ln()
                + ln_gamma((kf * theta + nf) / 2.0)
                + ln_gamma(kf * theta / 2.0 + 1.0);
            (kf * theta + nf, sgn * s * lmag.exp())
        })
        .collect()
}

/// Sum the large-r series with optimal truncation. Returns
/// (value, relative error estimate, number of terms used).
pub fn series_value(theta: f64, n: usize, r: f64) -> (f64, f64, usize) {
    let coeffs = tail_series(theta, n, 200);
    let lr = r.ln();
    let mut sum = 0.0;
    let mut biggest: f64 = 0.0;
    let mut prev = f64::INFINITY;
    let mut used = 0;
    let mut last = f64::INFINITY;
    for (k, (e, c)) in coeffs.into_iter().enumerate() {
        // Terms with sin(kπθ/2) = 0 vanish identically; skip them so they
        // do not trip the truncation tests.
        if ((k + 1) as f64 * theta / 2.0).fract().abs() < 1e-12 || ((k + 1) as f64 * theta / 2.0).fract() > 1.0 - 1e-12 {
            continue;
        }
        let t = c * (-e * lr).exp();
        let mag = t.abs();
        if theta > 1.0 && mag > prev && used > 2 {
            break;
        }
        prev = mag;
        sum += t;
        biggest = biggest.max(mag);
        used = k + 1;
        last = mag;
        if mag < 1e-18 * sum.abs() && used > 2 {
            break;
        }
    }
    if sum <= 0.0 || !sum.is_finite() {
        return (sum, f64::INFINITY, used);
    }
    let err = (last + 1e-16 * biggest) / sum;
    (sum, err, used)
}

/// Profile value at r = 0.
pub fn origin_value(theta: f64, n: usize) -> f64 {
    let nf = n as f64;
    gamma(nf / theta) / (theta * 2f64.powf(nf - 1.0) * PI.powf(nf / 2.0) * gamma(nf / 2.0))
}

/// Positive α-stable subordinator density (Laplace transform e^{-s^α}),
/// α ∈ (0, 1), by Kanter's integral representation.
pub fn subordinator_density(alpha: f64, tau: f64) -> f64 {
    let b = 1.0 / (1.0 - alpha);
    let ln_c = -alpha * b * tau.ln();
    let ln_k = |u: f64| -> f64 {
        b * ((alpha * u).sin().ln() - u.sin().ln()) + ((1.0 - alpha) * u).sin().ln() - (alpha * u).sin().ln()
    };
    // ln K is increasing on (0, π); locate where K·c crosses a few levels.
    let find = |level: f64| -> Option<f64> {
        let target = level.ln() - ln_c;
        let (mut lo, mut hi) = (1e-12, PI - 1e-12);
        if ln_k(lo) > target || ln_k(hi) < target {
            return None;
        }
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if ln_k(m) < target {
                lo = m;
            } else {
                hi = m;
            }
            if hi - lo < 1e-15 {
                break;
            }
        }
        Some(0.5 * (lo + hi))
    };
    let mut pts = vec![0.0, PI];
    for lv in [1e-3, 0.1, 1.0, 10.0, 100.0] {
        if let Some(u) = find(lv) {
            pts.push(u);
        }
    }
    let c = ln_c.exp();
    let f = |u: f64| {
        if u <= 0.0 || u >= PI {
            return 0.0;
        }
        let lk = ln_k(u);
        let kc = (lk + ln_c).exp();
        if kc > 745.0 {
            0.0
        } else {
            (lk - kc).exp()
        }
    };
    let _ = c;
    let e = adaptive(f, &pts, Tolerance::new(1e-13, 1e-300, 4000));
    let pre = alpha * b * (-b * tau.ln()).exp() / PI;
    pre * e.value
}

/// Profiles at each radius in `rs` through Gaussian subordination,
/// g(r) = ∫ (4πτ)^{-N/2} e^{-r²/4τ} η(τ) dτ, θ ≤ 1.
pub fn subordination_profile(theta: f64, n: usize, rs: &[f64]) -> Vec<f64> {
    let alpha = theta / 2.0;
    let nf = n as f64;
    // τ = e^w. The lower cut is where η is negligible, the upper where the
    // algebraic decay τ^{-N/2-α} has removed everything.
    let mut w_lo: f64 = -2.0;
    while w_lo > -400.0 && subordinator_density(alpha, w_lo.exp()) * w_lo.exp() > 1e-40 {
        w_lo -= 2.0;
    }
    let rmax = rs.iter().cloned().fold(1.0, f64::max);
    let w_hi = 2.0 * rmax.ln() + 45.0 / (nf / 2.0 + alpha) + 5.0;
    let h = 0.125;
    let panels = ((w_hi - w_lo) / h).ceil() as usize;
    let gl = gauss_legendre(10);
    let mut ws = Vec::with_capacity(panels * 10);
    let mut wt = Vec::with_capacity(panels * 10);
    for i in 0..panels {
        let a = w_lo + i as f64 * h;
        for (x, w) in gl.nodes.iter().zip(&gl.weights) {
            let wv = a + h * 0.5 * (x + 1.0);
            let tau = wv.exp();
            let eta = subordinator_density(alpha, tau);
            ws.push(wv);
            wt.push(0.5 * h * w * eta * tau * (4.0 * PI * tau).powf(-nf / 2.0));
        }
    }
    rs.iter()
        .map(|&r| {
            let r2 = r * r / 4.0;
            ws.iter().zip(&wt).map(|(wv, q)| q * (-r2 * (-wv).exp()).exp()).sum()
        })
        .collect()
}

/// Profile by Fourier inversion of e^{-|ξ|^θ}, θ > 1.
pub fn fourier_profile(theta: f64, n: usize, r: f64) -> f64 {
    if r == 0.0 {
        return origin_value(theta, n);
    }
    let xi_max = 45f64.powf(1.0 / theta);
    let half = PI / r;
    let mut pts = vec![0.0];
    let mut x = half;
    while x < xi_max {
        pts.push(x);
        x += half;
    }
    pts.push(xi_max);
    let tol = Tolerance::new(1e-13, 1e-18, 20000);
    match n {
        1 => adaptive(|xi: f64| (r * xi).cos() * (-xi.powf(theta)).exp(), &pts, tol).value / PI,
        2 => adaptive(|xi: f64| xi * bessel_j0(r * xi) * (-xi.powf(theta)).exp(), &pts, tol).value / (2.0 * PI),
        3 => {
            let v = adaptive(|xi: f64| xi * (r * xi).sin() * (-xi.powf(theta)).exp(), &pts, tol).value;
            v / (2.0 * PI * PI * r)
        }
        _ => f64::NAN,
    }
}
