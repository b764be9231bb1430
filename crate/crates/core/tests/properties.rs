use hardy_core::explorer::SweepConfig;
use hardy_core::kernel::kernel_product_identity;
use hardy_core::profile::{eval_profile, AuxiliaryH, SingularProfile};
use proptest::prelude::*;

proptest! {
    #[test]
    fn identity_holds_at_moderate_scales(
        x in -3.0f64..3.0, y in -3.0f64..3.0, e in -3.0f64..3.0,
        t in 0.2f64..5.0, f in 0.05f64..0.95,
    ) {
        let c = kernel_product_identity(1, &[x], &[y], &[e], f * t, t).unwrap();
        prop_assert!(c.rel_error <= 1e-12, "{:?}", c);
    }

    #[test]
    fn profiles_scale_linearly(a in 0.1f64..0.9, c in 0.0f64..10.0, x in 0.01f64..10.0, lambda in 0.0f64..5.0) {
        let u = SingularProfile::power(a, c, &[0.3]);
        let v = eval_profile(&u.scaled(lambda), &[x]);
        let w = lambda * eval_profile(&u, &[x]);
        prop_assert!((v - w).abs() <= 1e-13 * w.abs().max(1e-300));
    }

    #[test]
    fn log_h_round_trips(beta in 0.05f64..0.45, shift in 0.0f64..10.0, lx in -6.0f64..6.0) {
        let h = AuxiliaryH::log(beta, std::f64::consts::E + shift);
        let x = 10f64.powf(lx);
        prop_assert!((h.inverse(h.eval(x)) / x - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn sweep_rows_are_the_axis_product(np in 1usize..4, nc in 1usize..5) {
        let p: Vec<String> = (0..np).map(|i| format!("{}.0", 3 + i)).collect();
        let c: Vec<String> = (0..nc).map(|i| format!("0.0{}", i + 1)).collect();
        let text = format!("[axes]\np = [{}]\nc = [{}]\n", p.join(", "), c.join(", "));
        let cfg = SweepConfig::from_toml_str(&text).unwrap();
        let rows = cfg.rows();
        prop_assert_eq!(rows.len(), np * nc);
        prop_assert!(rows.windows(2).all(|w| w[0].p < w[1].p || (w[0].p == w[1].p && w[0].c < w[1].c)));
    }
}
