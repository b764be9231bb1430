use hardy_core::kernel::KernelSpec;
use hardy_core::profile::*;
use hardy_core::solver::ProblemSpec;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1e-300)
}

#[test]
fn critical_exponent_examples() {
    let c = critical_exponents(2, 1.0, 2.0).unwrap();
    assert_eq!((c.p_f, c.p_gamma), (2.0, 1.5));
    let c = critical_exponents(1, 0.5, 2.0).unwrap();
    assert_eq!((c.p_f, c.p_gamma), (3.0, 2.5));
    let c = critical_exponents(1, 0.5, 1.0).unwrap();
    assert_eq!((c.p_f, c.p_gamma), (2.0, 1.5));
    assert!(critical_exponents(1, 1.5, 2.0).is_err());
    assert!(critical_exponents(2, 0.0, 2.0).is_err());
    for n in 1..=3 {
        for &theta in &[0.5f64, 1.0, 1.5, 2.0] {
            for i in 1..20 {
                let gamma = theta.min(n as f64) * i as f64 / 20.0;
                let c = critical_exponents(n, gamma, theta).unwrap();
                assert!(1.0 < c.p_gamma && c.p_gamma < c.p_f);
            }
        }
    }
}

#[test]
fn psi_examples_and_limit() {
    assert!(close(psi_weight(&[2.0, 0.0, 0.0], 3, 2.0, 1.0, 2.0), 2.0, 1e-14));
    assert!(close(psi_weight(&[1.0, 0.0], 2, 1.5, 1.0, 2.0), 0.25, 1e-14));
    // Second branch at |z| = 1.
    assert_eq!(psi_weight(&[1.0], 1, 4.0, 0.5, 2.0), 1.0);
    // Critical Fujita with N <= θ uses the first branch.
    let v = psi_weight(&[1.0], 1, 3.0, 0.5, 2.0);
    assert!(close(v, 2f64.powf(-0.75), 1e-14));
    for &(n, p) in &[(1usize, 2.0), (1, 4.0), (3, 5.0 / 3.0), (2, 1.5)] {
        let mut prev = f64::INFINITY;
        for k in 1..=6 {
            let r = 10f64.powi(-k);
            let mut z = vec![0.0; n];
            z[0] = r;
            let v = psi_weight(&z, n, p, 0.5, 2.0);
            assert!(v < prev && v > 0.0);
            prev = v;
        }
        // Slowest branch decays like |z|^{γ/(p−1)}.
        let first = psi_weight(&{ let mut z = vec![0.0; n]; z[0] = 0.1; z }, n, p, 0.5, 2.0);
        assert!(prev <= first * 1e-5f64.powf(0.5 / (p - 1.0)) * (1.0 + 1e-12));
    }
}

#[test]
fn profile_values() {
    let f = SingularProfile::power(0.75, 1.0, &[0.0]);
    assert!(close(eval_profile(&f, &[2.0]), 0.594_603_557_501_360_6, 1e-14));
    assert_eq!(eval_profile(&f, &[0.0]), f64::INFINITY);
    let g = SingularProfile::logpower(1.0, 1.5, 1.0, &[0.0]);
    let want = (1.0 + std::f64::consts::E).ln().powf(-1.5);
    assert!(close(eval_profile(&g, &[1.0]), want, 1e-14));
    assert!(close(want, 0.6645, 2e-3));
    assert_eq!(eval_profile(&g, &[1.5]), 0.0);
    let d = SingularProfile::dirac(3.0, &[1.0]).plus_constant(0.5);
    assert_eq!(eval_profile(&d, &[0.0]), 0.5);
    assert_eq!(eval_profile(&d, &[1.0]), f64::INFINITY);
    assert!(SingularProfile::power(1.0, 1.0, &[0.0]).validate(1).is_err());
    assert!(SingularProfile::power(1.0, 1.0, &[0.0, 0.0]).validate(2).is_ok());
    assert!(SingularProfile::power(0.5, -1.0, &[0.0]).validate(1).is_err());
}

#[test]
fn profile_serializes_with_term_list() {
    let f = SingularProfile::power(0.5, 2.0, &[1.0]).plus_constant(0.25);
    let text = toml::to_string(&f).unwrap();
    assert!(text.contains("kind = \"power\""));
    let back: SingularProfile = toml::from_str(&text).unwrap();
    assert_eq!(back, f);
}

#[test]
fn power_h_inverse() {
    let h = AuxiliaryH::power(1.5);
    assert!(close(h.eval(4.0), 8.0, 1e-15));
    assert!(close(h.inverse(8.0), 4.0, 1e-15));
    assert_eq!(h.big_a(), std::f64::consts::E);
}

#[test]
fn log_h_monotone_and_invertible() {
    let h = AuxiliaryH::log(0.3, std::f64::consts::E);
    assert_eq!(h.eval(0.0), 0.0);
    let mut prev = 0.0;
    for i in 0..=600 {
        let x = 10f64.powf(-6.0 + 12.0 * i as f64 / 600.0);
        let v = h.eval(x);
        assert!(v > prev);
        prev = v;
    }
    for i in 0..=120 {
        let x = 10f64.powf(-6.0 + 12.0 * i as f64 / 120.0);
        let back = h.inverse(h.eval(x));
        assert!(close(back, x, 1e-10), "{x} {back}");
    }
}

#[test]
fn select_a_for_critical_fujita() {
    let a = select_a_min(0.3, 1, 3.0, 0.5, 2.0).unwrap();
    assert!(a.is_finite() && a >= 2.0 * std::f64::consts::E);
    let rep = monotonicity(0.3, a, 3.0, 0.5, 2.0);
    assert!(rep.holds(), "{rep:?}");
    let h = build_aux_h(1, 3.0, 0.5, 2.0, CaseP::CriticalFujita, None, Some(0.3)).unwrap();
    assert!(h.validated);
    assert_eq!(h.big_a(), a);
    // β outside (0, N/2).
    assert!(build_aux_h(1, 3.0, 0.5, 2.0, CaseP::CriticalFujita, None, Some(0.5)).is_err());
    assert!(build_aux_h(1, 3.0, 0.5, 2.0, CaseP::CriticalFujita, None, Some(0.7)).is_err());
    // Case inconsistent with p.
    assert!(build_aux_h(1, 4.0, 0.5, 2.0, CaseP::CriticalFujita, None, None).is_err());
    let hp = build_aux_h(1, 4.0, 0.5, 2.0, CaseP::SupercriticalFujita, None, None).unwrap();
    assert!(matches!(hp.case, HCase::Power { alpha } if alpha > 1.0 && alpha < 1.5));
}

#[test]
fn convexity_and_inverse_bound() {
    let h = build_aux_h(1, 2.5, 0.5, 2.0, CaseP::CriticalHardy, None, None).unwrap();
    assert!(min_second_difference(&h) >= -1e-9);
    let c = inverse_bound_constant(&h);
    assert!(c.is_finite() && c >= 1.0);
    for x in validation_grid().into_iter().step_by(97) {
        let HCase::Log { beta, big_a } = h.case else { unreachable!() };
        assert!(h.inverse(x) <= c * x * (big_a + x).ln().powf(-beta) * (1.0 + 1e-12));
    }
    assert!(min_second_difference(&AuxiliaryH::power(1.5)) >= -1e-9);
}

fn problem(p: f64, u0: SingularProfile, horizon: f64) -> ProblemSpec {
    ProblemSpec::new(KernelSpec::gaussian(1), p, 0.5, u0, horizon)
}

#[test]
fn template_examples() {
    let f = SingularProfile::power(2.0 / 3.0, 1.0, &[1.0]);
    let t = make_template(&problem(4.0, f.clone(), 1.0), TemplateForm::Ubar, 0.1, 0.0).unwrap();
    assert_eq!(t.base_profile, f);
    assert_eq!(t.psi_value, 1.0);
    assert_eq!(t.time_dilation, 2.0);
    assert!(close(t.prefactor, 2f64.powf(1.5), 1e-15));
    assert!(t.h.is_some());

    let d = SingularProfile::dirac(1.0, &[0.0]);
    let w = make_template(&problem(2.0, d.clone(), 1.0), TemplateForm::Wtilde, 0.2, 0.1).unwrap();
    assert_eq!((w.prefactor, w.time_dilation), (2.0, 1.0));
    assert_eq!(w.base_profile, d);
    assert!(w.h.is_none());
    assert_eq!(w.data_profile(), SingularProfile::dirac(0.2, &[0.0]).plus_constant(0.1));

    let v = make_template(&problem(2.5, d.clone(), 1.0), TemplateForm::Vbar, 0.1, 0.0).unwrap();
    let k = 1.0 / 1.5 + 1.0;
    assert_eq!(v.base_profile.terms[0].kind, TermKind::Logpower { a: 1.0, k, cutoff: 1.0 });
    assert!(matches!(v.h.unwrap().case, HCase::Log { .. }));

    // Structural failures.
    assert!(make_template(&problem(4.0, SingularProfile::power(0.5, 1.0, &[0.0]), 1.0), TemplateForm::Ubar, 0.1, 0.0).is_err());
    assert!(make_template(&problem(3.5, d.clone(), 1.0), TemplateForm::Wtilde, 0.1, 0.0).is_err());
    let dz = SingularProfile::dirac(1.0, &[1.0]);
    assert!(make_template(&problem(2.75, dz.clone(), 2.0), TemplateForm::WbarPlus, 0.1, 0.0).is_err());
    let wp = make_template(&problem(2.75, dz, 0.5), TemplateForm::WbarPlus, 0.1, 0.0).unwrap();
    assert_eq!(wp.psi_value, 1.0);
}
