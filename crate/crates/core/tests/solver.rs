use std::sync::Arc;

use hardy_core::kernel::KernelSpec;
use hardy_core::profile::SingularProfile;
use hardy_core::quad::{GridSpec, QuadSpec, SpaceTimeGrid};
use hardy_core::solver::*;

// Small grid: keeps each Φ application to a second or two.
fn small() -> GridSpec {
    GridSpec { levels: 6, outer: 4, time_nodes: 8, ..GridSpec::default() }
}

fn problem(p: f64, a: f64, c: f64, z: f64) -> ProblemSpec {
    ProblemSpec::new(KernelSpec::gaussian(1), p, 0.5, SingularProfile::power(a, c, &[z]), 1.0)
}

fn solve(pr: &ProblemSpec, spec: &GridSpec, q: &QuadSpec, retain: bool) -> SolveReport {
    let grid = Arc::new(SpaceTimeGrid::build(pr, spec).unwrap());
    let opts = SolverOptions { retain_iterates: retain, ..SolverOptions::default() };
    picard_solve_with(pr, grid, q, &opts).unwrap()
}

#[test]
fn zero_data_converge_immediately() {
    let pr = problem(4.0, 0.5, 0.0, 0.0).with_data(SingularProfile::zero());
    let r = solve(&pr, &small(), &QuadSpec::duhamel_default(), true);
    assert_eq!(r.classification, Classification::Converged);
    assert_eq!(r.iterations, 0);
    let u = r.field.clone().unwrap();
    assert!(u.node_values().iter().all(|v| *v == 0.0));
    assert_eq!(verify_monotone(&r, &[u.clone(), u]).unwrap(), 0.0);
}

#[test]
fn monotone_check_needs_two_iterates() {
    let pr = problem(4.0, 0.5, 0.0, 0.0).with_data(SingularProfile::zero());
    let r = solve(&pr, &small(), &QuadSpec::duhamel_default(), false);
    assert!(verify_monotone(&r, &[]).is_err());
}

#[test]
fn small_data_at_optimal_exponent_converge() {
    let pr = problem(4.0, 2.0 / 3.0, 0.05, 1.0);
    let r = solve(&pr, &small(), &QuadSpec::duhamel_default(), true);
    assert_eq!(r.classification, Classification::Converged, "{:?}", r.sup_ratios);
    assert!(*r.residuals.last().unwrap() < 1e-5);
    assert!(r.fixed_point_residual.unwrap() <= 1e-5, "{:?}", r.fixed_point_residual);
    assert!(r.sup_ratios.windows(2).all(|w| w[1] >= w[0] - 2e-5));
    let v = verify_monotone(&r, &[]).unwrap();
    assert!(v <= 2e-5, "violation {v}");
    assert_eq!(v, r.monotone_violation);
}

#[test]
fn coarse_quadrature_keeps_violation_within_its_tolerance() {
    let pr = problem(4.0, 2.0 / 3.0, 0.05, 1.0);
    let q = QuadSpec::duhamel_default().with_rel_tol(1e-2);
    let r = solve(&pr, &small(), &q, false);
    assert!(r.monotone_violation <= 2e-2, "violation {}", r.monotone_violation);
}

#[test]
fn supercritical_exponent_diverges() {
    for c in [1e-3, 1.0] {
        let pr = problem(3.0, 0.9, c, 0.0);
        let r = solve(&pr, &small(), &QuadSpec::duhamel_default(), false);
        assert_eq!(r.classification, Classification::Diverging, "c = {c}: {:?}", r.sup_ratios);
        assert!(r.divergence.is_some());
    }
}

#[test]
fn iterates_are_dominated_by_a_larger_solution() {
    // Comparison: data below data give a solution below a solution.
    let lo = solve(&problem(4.0, 2.0 / 3.0, 0.02, 1.0), &small(), &QuadSpec::duhamel_default(), false);
    let hi = solve(&problem(4.0, 2.0 / 3.0, 0.05, 1.0), &small(), &QuadSpec::duhamel_default(), false);
    let (lo, hi) = (lo.field.unwrap(), hi.field.unwrap());
    assert!(domination_ratio(&lo, &hi) <= 1.0);
}

#[test]
fn scaling_identity_and_nonlinear_mismatch() {
    let pr = problem(4.0, 0.5, 0.02, 0.0);
    let r = solve(&pr, &small(), &QuadSpec::duhamel_default(), false);
    assert_eq!(r.classification, Classification::Converged);
    let u = r.field.unwrap();
    assert_eq!(scaling_check(&pr, &u, 1.0).unwrap(), 0.0);
    let m = scaling_check(&pr, &u, 2.0).unwrap();
    assert!(m <= 1e-3, "mismatch {m}");
}

#[test]
fn linear_problem_scales_exactly() {
    let mut pr = problem(4.0, 0.5, 1.0, 0.0);
    pr.coefficient = 0.0;
    let r = solve(&pr, &small(), &QuadSpec::duhamel_default(), false);
    let u = r.field.unwrap();
    for lambda in [0.5, 2.0] {
        let m = scaling_check(&pr, &u, lambda).unwrap();
        assert!(m <= 1e-6, "lambda {lambda}: mismatch {m}");
    }
}

#[test]
fn scaling_check_rejects_other_data() {
    let pr = problem(4.0, 0.5, 0.02, 1.0);
    let r = solve(&pr.with_data(SingularProfile::zero()), &small(), &QuadSpec::duhamel_default(), false);
    let u = r.field.unwrap();
    assert!(scaling_check(&pr, &u, 2.0).is_err());
    let origin = problem(4.0, 0.5, 0.02, 0.0);
    assert!(scaling_check(&origin, &u, 3.0).is_err());
}

#[test]
fn grid_must_match_problem() {
    let pr = problem(4.0, 2.0 / 3.0, 0.05, 1.0);
    let other = problem(4.0, 2.0 / 3.0, 0.05, 0.3);
    let grid = Arc::new(SpaceTimeGrid::build(&other, &small()).unwrap());
    assert!(picard_solve(&pr, grid, &QuadSpec::duhamel_default(), 5, 1e-5).is_err());
}

#[test]
fn options_are_validated() {
    let bad = SolverOptions { growth_factor: 1.0, ..SolverOptions::default() };
    assert!(bad.validate().is_err());
    assert!(SolverOptions::default().validate().is_ok());
}

#[test]
fn report_serializes_histories() {
    let pr = problem(4.0, 2.0 / 3.0, 0.05, 1.0);
    let r = solve(&pr, &small(), &QuadSpec::duhamel_default(), false);
    let v: serde_json::Value = serde_json::to_value(&r).unwrap();
    assert_eq!(v["classification"], "converged");
    assert_eq!(v["sup_ratios"].as_array().unwrap().len(), r.iterations + 1);
    assert_eq!(v["residuals"].as_array().unwrap().len(), r.iterations);
}
