use std::f64::consts::PI;
use std::sync::Arc;

use hardy_core::kernel::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn closed_form_kernel_values() {
    let g1 = KernelSpec::gaussian(1);
    assert!(rel(eval_kernel(&g1, &[0.0], 1.0).unwrap(), 0.282_094_791_773_878_14) < 1e-15);
    let g2 = KernelSpec::gaussian(2);
    assert!(rel(eval_kernel(&g2, &[2.0, 0.0], 1.0).unwrap(), (-1f64).exp() / (4.0 * PI)) < 1e-15);
    let c1 = KernelSpec::fractional(1, 1.0, None).unwrap();
    assert!(rel(eval_kernel(&c1, &[0.0], 1.0).unwrap(), 1.0 / PI) < 1e-15);
}

#[test]
fn cauchy_kernel_by_independent_fourier_quadrature() {
    // (1/π)∫₀^∞ cos(xξ) e^{-tξ} dξ, integrated numerically on a long fine grid.
    let c1 = KernelSpec::fractional(1, 1.0, None).unwrap();
    for &(x, t) in &[(0.0, 1.0), (0.7, 0.5), (2.0, 3.0)] {
        let n = 400_000;
        let top = 60.0 / t;
        let h = top / n as f64;
        let mut s = 0.0;
        for i in 0..=n {
            let xi = i as f64 * h;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            s += w * (x * xi).cos() * (-t * xi).exp();
        }
        let oracle = s * h / PI;
        assert!(rel(eval_kernel(&c1, &[x], t).unwrap(), oracle) < 1e-8);
    }
}

#[test]
fn kernel_errors() {
    let g = KernelSpec::gaussian(1);
    assert!(eval_kernel(&g, &[0.0], 0.0).is_err());
    assert!(eval_kernel(&g, &[0.0], -1.0).is_err());
    assert!(KernelSpec::fractional(1, 1.5, None).is_err());
    assert!(KernelSpec::fractional(1, 2.5, None).is_err());
    assert!(kernel_product_identity(1, &[0.0], &[0.0], &[0.0], 1.0, 1.0).is_err());
}

#[test]
fn product_identity_examples() {
    let c = kernel_product_identity(1, &[1.0], &[0.3], &[-0.5], 0.4, 1.0).unwrap();
    assert!(c.rel_error <= 1e-12);
    let d = kernel_product_identity(1, &[0.0], &[0.0], &[0.0], 0.25, 1.0).unwrap();
    let want = gaussian(1, 0.0, 0.75) * gaussian(1, 0.0, 0.25);
    assert!(rel(d.lhs, want) < 1e-15 && rel(d.rhs, want) < 1e-14);
}

#[test]
fn product_identity_random_tuples() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for dim in 1..=3 {
        for _ in 0..10_000 {
            let mut pt = || (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect::<Vec<f64>>();
            let (x, y, e) = (pt(), pt(), pt());
            let t = 10f64.powf(rng.random_range(-1.0..1.0));
            let s = t * rng.random_range(0.01..0.99);
            let c = kernel_product_identity(dim, &x, &y, &e, s, t).unwrap();
            if c.lhs > 1e-290 {
                assert!(c.rel_error <= 1e-12, "{dim} {c:?}");
            }
        }
    }
}

#[test]
fn gaussian_selfchecks() {
    for dim in 1..=3 {
        let r = kernel_selfchecks(&KernelSpec::gaussian(dim), 30, 3).unwrap();
        assert!(r.normalization <= 1e-8 && r.symmetry == 0.0 && r.semigroup <= 1e-8, "{dim} {r:?}");
        assert!(semigroup_at_origin(&KernelSpec::gaussian(dim), 1.0, 1.0) <= 1e-10);
    }
}

#[test]
fn cauchy_selfchecks() {
    let k = KernelSpec::fractional(1, 1.0, None).unwrap();
    let r = kernel_selfchecks(&k, 30, 5).unwrap();
    assert!(r.semigroup <= 1e-6 && r.normalization <= 1e-6, "{r:?}");
    assert!(semigroup_at_origin(&k, 1.0, 1.0) <= 1e-10);
}

#[test]
fn cauchy_table_matches_closed_form() {
    let t = build_fractional_table(1.0, 1, 512, 100.0).unwrap();
    assert_eq!(t.tail_exponent, 2.0);
    for w in t.nodes.windows(2) {
        for r in [w[0], 0.5 * (w[0] + w[1])] {
            let want = 1.0 / (PI * (1.0 + r * r));
            assert!(rel(t.profile(r), want) <= 1e-8, "r = {r}");
        }
    }
    for r in [120.0, 1e3, 1e5] {
        assert!(rel(t.profile(r), 1.0 / (PI * (1.0 + r * r))) <= 1e-8);
    }
}

#[test]
fn near_gaussian_table() {
    let t = build_fractional_table(1.999, 1, 512, 100.0).unwrap();
    for i in 0..=300 {
        let r = i as f64 * 0.01;
        assert!((t.profile(r) - (4.0 * PI).powf(-0.5) * (-r * r / 4.0).exp()).abs() <= 1e-3);
    }
}

#[test]
fn fractional_tables_normalise_and_satisfy_semigroup() {
    for &theta in &[0.5, 1.5] {
        for dim in 1..=3 {
            let t = build_fractional_table(theta, dim, 512, 100.0).unwrap();
            assert!((t.mass() - 1.0).abs() <= 1e-6);
            assert!(t.values.windows(2).all(|w| w[1] <= w[0]));
            let k = KernelSpec::fractional(dim, theta, Some(Arc::new(t))).unwrap();
            let r = kernel_selfchecks(&k, 8, 11).unwrap();
            assert!(r.normalization <= 1e-6 && r.semigroup <= 1e-6 && r.symmetry == 0.0, "{theta} {dim} {r:?}");
            assert!(semigroup_at_origin(&k, 1.0, 1.0) <= 1e-6 * k.radial(0.0, 2.0));
        }
    }
}

#[test]
fn fractional_self_similarity() {
    let t = Arc::new(build_fractional_table(1.5, 2, 256, 100.0).unwrap());
    let k = KernelSpec::fractional(2, 1.5, Some(t)).unwrap();
    for lambda in [0.5, 2.0, 10.0] {
        for &(x, tt) in &[([0.3, 0.1], 0.7), ([2.0, -1.0], 0.05), ([10.0, 4.0], 3.0)] {
            let a = eval_kernel(&k, &x, tt).unwrap();
            let xs = [lambda * x[0], lambda * x[1]];
            let b = lambda.powi(2) * eval_kernel(&k, &xs, lambda.powf(1.5) * tt).unwrap();
            assert!(rel(b, a) < 1e-9);
        }
    }
}

#[test]
fn table_roundtrip_and_rejects_bad_files() {
    let dir = tempfile::tempdir().unwrap();
    let t = build_fractional_table(0.5, 1, 64, 100.0).unwrap();
    let path = dir.path().join("k.json");
    t.save(&path).unwrap();
    let back = RadialKernelTable::load(&path).unwrap();
    assert_eq!(back, t);
    assert_eq!(back.profile(3.3), t.profile(3.3));
    std::fs::write(&path, std::fs::read_to_string(&path).unwrap().replace("\"version\": 1", "\"version\": 99")).unwrap();
    assert!(RadialKernelTable::load(&path).is_err());
    assert!(build_fractional_table(0.5, 1, 32, 100.0).is_err());
    assert!(build_fractional_table(2.0, 1, 64, 100.0).is_err());
}
