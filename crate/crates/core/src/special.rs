//! Special functions not covered by `statrs`: Kummer's M on the negative real
//! axis, scaled I0, J0, and the closed-form heat evolution of a power datum.

use std::f64::consts::PI;

pub use statrs::function::gamma::{gamma, ln_gamma};

/// Surface area of the unit sphere in R^N.
pub fn sphere_area(n: usize) -> f64 {
    let h = n as f64 / 2.0;
    2.0 * PI.powf(h) / gamma(h)
}

/// Kummer's confluent hypergeometric function M(a, b, -x) for x >= 0 and
/// 0 < a < b.
pub fn kummer_m_neg(a: f64, b: f64, x: f64) -> f64 {
    debug_assert!(x >= 0.0 && a > 0.0 && b > a);
    if x <= 50.0 {
        // Kummer transformation: M(a,b,-x) = e^{-x} M(b-a,b,x); all terms positive.
        let c = b - a;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 0.0;
        loop {
            term *= (c + k) / (b + k) * x / (k + 1.0);
            sum += term;
            k += 1.0;
            if term < 1e-17 * sum && k > x {
                break;
            }
        }
        (-x).exp() * sum
    } else {
        let lead = gamma(b) / gamma(b - a) * x.powf(-a);
        let mut term: f64 = 1.0;
        let mut sum: f64 = 1.0;
        let mut s = 0.0;
        loop {
            let next = term * (a + s) * (a - b + 1.0 + s) / ((s + 1.0) * x);
            if next.abs() >= term.abs() || next.abs() < 1e-17 * sum.abs() {
                if next.abs() < term.abs() {
                    sum += next;
                }
                break;
            }
            term = next;
            sum += term;
            s += 1.0;
        }
        lead * sum
    }
}

/// F_{a,N}(ξ) = ∫_{R^N} G(ξe₁ - y, 1)|y|^{-a} dy for the Gaussian kernel,
/// 0 < a < N. The heat evolution of |y|^{-a} is t^{-a/2} F(|x|/√t).
pub fn power_heat_profile(a: f64, n: usize, xi: f64) -> f64 {
    let nh = n as f64 / 2.0;
    let pre = gamma((n as f64 - a) / 2.0) / gamma(nh) * 2f64.powf(-a);
    if a == 0.0 {
        return 1.0;
    }
    pre * kummer_m_neg(a / 2.0, nh, xi * xi / 4.0)
}

/// e^{-x} I0(x), x >= 0.
pub fn bessel_i0_scaled(x: f64) -> f64 {
    let x = x.abs();
    if x <= 50.0 {
        let q = x * x / 4.0;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        while term > 1e-17 * sum {
            term *= q / (k * k);
            sum += term;
            k += 1.0;
        }
        (-x).exp() * sum
    } else {
        let mut term: f64 = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        loop {
            let next = term * (2.0 * k - 1.0) * (2.0 * k - 1.0) / (k * 8.0 * x);
            if next >= term || next < 1e-17 {
                break;
            }
            term = next;
            sum += term;
            k += 1.0;
        }
        sum / (2.0 * PI * x).sqrt()
    }
}

/// Bessel J0.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x < 25.0 {
        // Trapezoid rule on the periodic integrand of (1/π)∫₀^π cos(x sin φ) dφ
        // converges geometrically once the point count exceeds x.
        let m = 96;
        let h = PI / m as f64;
        let mut s = 0.0;
        for i in 0..m {
            let phi = (i as f64 + 0.5) * h;
            s += (x * phi.sin()).cos();
        }
        s / m as f64
    } else {
        // Hankel asymptotic expansion.
        let z8 = 8.0 * x;
        let (mut p, mut q) = (1.0, 0.0);
        let mut term: f64 = 1.0;
        let mut k = 1.0;
        loop {
            let a = (2.0 * k - 1.0) * (2.0 * k - 1.0) / (k * z8);
            let next = term * a;
            if next.abs() >= term.abs() || next.abs() < 1e-17 {
                break;
            }
            term = next;
            if (k as i64) % 2 == 1 {
                q += term * if (k as i64) % 4 == 1 { -1.0 } else { 1.0 };
            } else {
                p += term * if (k as i64) % 4 == 2 { -1.0 } else { 1.0 };
            }
            k += 1.0;
        }
        let chi = x - PI / 4.0;
        (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kummer_series(a: f64, b: f64, z: f64) -> f64 {
        let mut t = 1.0;
        let mut s = 1.0;
        for k in 0..400 {
            let k = k as f64;
            t *= (a + k) / (b + k) * z / (k + 1.0);
            s += t;
        }
        s
    }

    #[test]
    fn kummer_matches_direct_series() {
        for &(a, b, x) in &[(0.25, 0.5, 0.3), (0.4, 1.5, 4.0), (1.0, 1.5, 10.0), (0.9, 1.0, 2.0)] {
            let d = kummer_series(a, b, -x);
            assert!((kummer_m_neg(a, b, x) - d).abs() < 1e-12 * d.abs().max(1e-3));
        }
    }

    #[test]
    fn kummer_branches_join() {
        for &(a, b) in &[(0.25, 0.5), (0.4, 1.0), (1.2, 1.5)] {
            let lo = kummer_m_neg(a, b, 50.0);
            let hi = kummer_m_neg(a, b, 50.0 + 1e-9);
            assert!((lo - hi).abs() < 1e-10 * lo, "{a} {b} {lo} {hi}");
        }
    }

    #[test]
    fn power_profile_origin_value() {
        let v = power_heat_profile(0.5, 1, 0.0);
        let want = gamma(0.25) * 4f64.powf(-0.25) / PI.sqrt();
        assert!((v - want).abs() < 1e-14 * want);
    }

    #[test]
    fn i0_and_j0_known_values() {
        assert!((bessel_i0_scaled(1.0) - 1.266_065_877_752_008_4 * (-1f64).exp()).abs() < 1e-15);
        let q: f64 = 900.0;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..400 {
            term *= q / (k * k) as f64;
            sum += term;
        }
        assert!((bessel_i0_scaled(60.0) - sum * (-60f64).exp()).abs() < 1e-13 * bessel_i0_scaled(60.0));
        assert!((bessel_j0(1.0) - 0.765_197_686_557_966_6).abs() < 1e-14);
        assert!((bessel_j0(30.0) - (-0.086_367_983_581_040_2)).abs() < 1e-12);
        assert!((bessel_j0(24.9) - bessel_j0_series_check(24.9)).abs() < 1e-9);
    }

    fn bessel_j0_series_check(x: f64) -> f64 {
        // crude high-resolution midpoint rule
        let m = 20000;
        let h = PI / m as f64;
        (0..m).map(|i| (x * ((i as f64 + 0.5) * h).sin()).cos()).sum::<f64>() / m as f64
    }
}
