use std::sync::Arc;

use hardy_core::exec::Execution;
use hardy_core::kernel::{gaussian, KernelSpec};
use hardy_core::profile::*;
use hardy_core::quad::*;
use hardy_core::solver::ProblemSpec;
use hardy_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Γ(1/4) 4^{-1/4} π^{-1/2} and 4/3 of it, to 30 digits (mpmath).
const CONV_HALF: f64 = 1.446_409_084_632_077_1;
const DUHAMEL_ONE: f64 = 1.928_545_446_176_102_9;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn k1() -> KernelSpec {
    KernelSpec::gaussian(1)
}

#[test]
fn dirac_convolution_is_the_kernel() {
    let q = QuadSpec::default();
    let u0 = SingularProfile::dirac(3.0, &[0.7]);
    for &(x, t) in &[(0.2, 0.3), (-4.0, 2.0), (0.7, 1e-4)] {
        let v = heat_convolve(&k1(), &u0, &[x], t, &q).unwrap();
        assert!(rel(v, 3.0 * gaussian(1, (x - 0.7f64).abs(), t)) < 1e-14);
    }
}

#[test]
fn half_power_at_origin() {
    let u0 = SingularProfile::power(0.5, 1.0, &[0.0]);
    let v = heat_convolve(&k1(), &u0, &[0.0], 1.0, &QuadSpec::default()).unwrap();
    assert!(rel(v, CONV_HALF) < 1e-8, "{v}");
}

#[test]
fn constants_are_preserved() {
    let u0 = SingularProfile::constant(0.37, 2);
    let k = KernelSpec::gaussian(2);
    let v = heat_convolve(&k, &u0, &[0.3, -1.0], 0.8, &QuadSpec::default()).unwrap();
    assert!((v - 0.37).abs() < 1e-8);
}

#[test]
fn hardy_weight_bound_constant() {
    // ∫ G(y, τ)|y|^{-γ} dy τ^{γ/2} does not depend on τ.
    let gamma = 0.5;
    let u0 = SingularProfile::power(gamma, 1.0, &[0.0]);
    let q = QuadSpec::default();
    let cs: Vec<f64> = [1e-4, 0.01, 0.3, 1.0, 50.0]
        .iter()
        .map(|&tau: &f64| heat_convolve(&k1(), &u0, &[0.0], tau, &q).unwrap() * tau.powf(gamma / 2.0))
        .collect();
    for c in &cs {
        assert!(rel(*c, CONV_HALF) < 1e-7, "{cs:?}");
    }
}

#[test]
fn duhamel_of_constant_field() {
    let one = FnField::new(Geometry::Line, vec![0.0], |_, _| 1.0);
    let q = QuadSpec::duhamel_default();
    let start = std::time::Instant::now();
    let v = duhamel(&k1(), 0.5, 2.0, &one, &[0.0], 1.0, &q).unwrap();
    assert!(rel(v, DUHAMEL_ONE) < 1e-5, "{v}");
    assert!(start.elapsed().as_secs_f64() < 10.0);
    let fine = duhamel(&k1(), 0.5, 2.0, &one, &[0.0], 1.0, &q.clone().with_rel_tol(1e-10)).unwrap();
    assert!(rel(fine, DUHAMEL_ONE) < 1e-10, "{fine}");
}

#[test]
fn duhamel_of_zero_is_zero() {
    let zero = FnField::new(Geometry::Line, vec![0.0], |_, _| 0.0);
    let v = duhamel(&k1(), 0.5, 3.0, &zero, &[0.4], 0.5, &QuadSpec::duhamel_default()).unwrap();
    assert_eq!(v, 0.0);
}

#[test]
fn duhamel_scales_like_c_to_the_p() {
    let p = 3.0;
    let u = |y: f64, s: f64| (1.0 + (y - 1.0).abs()).powf(-0.5) * (1.0 + s);
    let a = FnField::new(Geometry::Line, vec![0.0, 1.0], u);
    for &c in &[0.1, 2.5, 40.0] {
        let b = FnField::new(Geometry::Line, vec![0.0, 1.0], move |y, s| c * u(y, s));
        let r = RuleLevel::new(0);
        let va = duhamel_rule(&k1(), 0.5, p, &a, 0.3, 0.7, r).unwrap().value;
        let vb = duhamel_rule(&k1(), 0.5, p, &b, 0.3, 0.7, r).unwrap().value;
        assert!(rel(vb, c.powf(p) * va) < 1e-10);
    }
}

#[test]
fn duhamel_detects_nonintegrable_sources() {
    // E of |x|^{-0.9} with p = 3, γ = 1/2: the inner integral grows like
    // s^{-1.1} as s → 0.
    let k = k1();
    let u0 = SingularProfile::power(0.9, 1.0, &[0.0]);
    let env = Envelope::new(&k, &u0, 1.0).unwrap();
    let f = FnField::new(Geometry::Line, vec![0.0], move |y, s| env.value_reduced(y, s));
    match duhamel(&k, 0.5, 3.0, &f, &[0.5], 1.0, &QuadSpec::duhamel_default()) {
        Err(Error::Divergent { ratio, .. }) => assert!(ratio >= DIVERGENCE_RATIO),
        other => panic!("expected divergence, got {other:?}"),
    }
    // The scale-invariant exponent 0.75 stays integrable.
    let u0 = SingularProfile::power(0.75, 1.0, &[0.0]);
    let env = Envelope::new(&k, &u0, 1.0).unwrap();
    let f = FnField::new(Geometry::Line, vec![0.0], move |y, s| env.value_reduced(y, s));
    assert!(duhamel(&k, 0.5, 3.0, &f, &[0.5], 1.0, &QuadSpec::duhamel_default()).is_ok());
}

fn small_problem(u0: SingularProfile) -> (ProblemSpec, Arc<SpaceTimeGrid>) {
    let pr = ProblemSpec::new(k1(), 4.0, 0.5, u0, 1.0);
    let spec = GridSpec { levels: 5, outer: 4, time_nodes: 6, ..GridSpec::default() };
    let grid = Arc::new(SpaceTimeGrid::build(&pr, &spec).unwrap());
    (pr, grid)
}

#[test]
fn phi_of_zero_with_dirac_data_is_the_kernel() {
    let (pr, grid) = small_problem(SingularProfile::dirac(1.0, &[1.0]));
    let op = PhiOperator::new(&pr, grid.clone(), &QuadSpec::duhamel_default()).unwrap();
    let zero = FnField::new(Geometry::Line, vec![0.0, 1.0], |_, _| 0.0);
    let out = op.apply(&zero).unwrap();
    for (k, v) in out.values.iter().enumerate() {
        let (y, t) = grid.node(k);
        let g = gaussian(1, (y - 1.0).abs(), t);
        assert!((v - g).abs() <= 1e-13 * g, "{y} {t}: {v}");
    }
}

#[test]
fn phi_of_zero_data_and_zero_field_vanishes() {
    let (pr, grid) = small_problem(SingularProfile::zero());
    let q = QuadSpec::duhamel_default();
    let env = Arc::new(Envelope::new(&pr.kernel, &SingularProfile::constant(1.0, 1), 1.0).unwrap());
    let u = DiscreteField::from_ratios(grid.clone(), env.clone(), vec![0.0; grid.len()]).unwrap();
    let out = apply_phi(&pr, &u, &q).unwrap();
    assert!(out.node_values().iter().all(|v| *v == 0.0));
}

#[test]
fn phi_is_monotone_on_ordered_pairs() {
    let (pr, grid) = small_problem(SingularProfile::power(2.0 / 3.0, 0.05, &[1.0]));
    let q = QuadSpec::duhamel_default().with_execution(Execution::Sequential);
    let op = PhiOperator::new(&pr, grid.clone(), &q).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..3 {
        let lo: Vec<f64> = (0..grid.len()).map(|_| rng.random_range(0.2..1.5)).collect();
        let hi: Vec<f64> = lo.iter().map(|r| r * rng.random_range(1.0..2.0)).collect();
        let a = op.apply(&DiscreteField::from_ratios(grid.clone(), op.envelope.clone(), lo).unwrap()).unwrap();
        let b = op.apply(&DiscreteField::from_ratios(grid.clone(), op.envelope.clone(), hi).unwrap()).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!(*x <= *y * (1.0 + 2.0 * q.rel_tol));
        }
    }
}

#[test]
fn parallel_and_sequential_phi_agree_bitwise() {
    let (pr, grid) = small_problem(SingularProfile::power(2.0 / 3.0, 0.05, &[1.0]));
    let q = QuadSpec::duhamel_default();
    let seq = PhiOperator::new(&pr, grid.clone(), &q.clone().with_execution(Execution::Sequential)).unwrap();
    let par = PhiOperator::new(&pr, grid.clone(), &q.with_execution(Execution::Parallel)).unwrap();
    let u = seq.initial().unwrap();
    assert_eq!(seq.apply(&u).unwrap().values, par.apply(&u).unwrap().values);
}

#[test]
fn frozen_rule_agrees_with_finer_levels() {
    let (pr, grid) = small_problem(SingularProfile::power(2.0 / 3.0, 0.05, &[1.0]));
    let op = PhiOperator::new(&pr, grid.clone(), &QuadSpec::duhamel_default()).unwrap();
    let u = op.initial().unwrap();
    for k in [0, grid.len() / 2, grid.len() - 1] {
        let (x, t) = grid.node(k);
        let a = duhamel_rule(&pr.kernel, pr.gamma, pr.p, &u, x, t, op.rule).unwrap().value;
        let b = duhamel_rule(&pr.kernel, pr.gamma, pr.p, &u, x, t, RuleLevel::new(3)).unwrap().value;
        assert!(rel(a, b) < 1e-5, "node {k}: {a} vs {b}");
    }
}

fn ubar_template() -> SupersolutionTemplate {
    let pr = ProblemSpec::new(k1(), 4.0, 0.5, SingularProfile::power(2.0 / 3.0, 1.0, &[1.0]), 1.0);
    let mut t = make_template(&pr, TemplateForm::Ubar, 0.1, 0.0).unwrap();
    t.h = Some(AuxiliaryH::power(1.4));
    t
}

#[test]
fn eval_u_matches_brute_force() {
    let t = ubar_template();
    let q = QuadSpec::default();
    let v = eval_u(&t, &k1(), &[1.5], 0.1, &q).unwrap();
    // Brute force: ∫ (G(d−w) + G(d+w)) w^{−b} dw with w = v^{1/(1−b)}, midpoint rule.
    let b = 2.0 / 3.0 * 1.4;
    let (d, tau) = (0.5, 0.2);
    let vmax = 12f64.powf(1.0 - b);
    let n = 400_000;
    let h = vmax / n as f64;
    let mut sum = 0.0;
    for i in 0..n {
        let w = ((i as f64 + 0.5) * h).powf(1.0 / (1.0 - b));
        sum += gaussian(1, d - w, tau) + gaussian(1, d + w, tau);
    }
    let brute = (sum * h / (1.0 - b)).powf(1.0 / 1.4);
    assert!(rel(v, brute) < 1e-5, "{v} vs {brute}");
    assert!(rel(v, 6.521_459_576_245_138) < 1e-8, "{v}");
}

#[test]
fn template_field_matches_eval_u() {
    let t = ubar_template();
    let f = TemplateField::new(&t, &k1(), 1.0).unwrap();
    let q = QuadSpec::default();
    for &(x, s) in &[(1.5, 0.1), (1.001, 1e-3), (-3.0, 0.9), (0.0, 0.5)] {
        let want = t.amplitude() * eval_u(&t, &k1(), &[x], s, &q).unwrap();
        assert!(rel(f.value(x, s), want) < 1e-8, "{x} {s}");
    }
}

#[test]
fn log_template_field_matches_eval_u() {
    // p = p_F = 3: log-corrected base profile and log-case H.
    let pr = ProblemSpec::new(k1(), 3.0, 0.5, SingularProfile::dirac(1.0, &[1.0]), 1.0);
    let t = make_template(&pr, TemplateForm::Ubar, 0.05, 0.0).unwrap();
    let f = TemplateField::new(&t, &k1(), 1.0).unwrap();
    let q = QuadSpec::default();
    for &(x, s) in &[(1.3, 0.1), (1.0001, 1e-4), (-2.0, 0.7)] {
        let want = t.amplitude() * eval_u(&t, &k1(), &[x], s, &q).unwrap();
        // Table interpolation, not quadrature, limits the agreement here.
        assert!(rel(f.value(x, s), want) < 5e-4, "{x} {s}: {} vs {want}", f.value(x, s));
    }
}

#[test]
fn quad_spec_validation() {
    assert!(QuadSpec::default().validate().is_ok());
    assert!(QuadSpec::default().with_rel_tol(0.0).validate().is_err());
    let q = QuadSpec::default().with_singular_point(&[0.0]).with_singular_point(&[0.0]);
    assert_eq!(q.singular_points.len(), 1);
    let parsed: QuadSpec = toml::from_str("rel_tol = 1e-5\nexecution = \"sequential\"").unwrap();
    assert_eq!(parsed.frozen_level(), 0);
    assert_eq!(parsed.execution, Execution::Sequential);
}
