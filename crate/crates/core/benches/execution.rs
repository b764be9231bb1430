use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};
use hardy_core::audit::{audit_inequality, AuditTarget, SampleSpec};
use hardy_core::exec::Execution;
use hardy_core::explorer::{sweep, SweepConfig};
use hardy_core::kernel::KernelSpec;
use hardy_core::profile::SingularProfile;
use hardy_core::quad::{GridSpec, PhiOperator, QuadSpec, SpaceTimeGrid};
use hardy_core::solver::ProblemSpec;

fn small_grid() -> GridSpec {
    GridSpec { levels: 5, outer: 3, time_nodes: 6, ..GridSpec::default() }
}

fn apply_phi(c: &mut Criterion) {
    let pr = ProblemSpec::new(KernelSpec::gaussian(1), 4.0, 0.5, SingularProfile::power(2.0 / 3.0, 0.05, &[1.0]), 1.0);
    let grid = Arc::new(SpaceTimeGrid::build(&pr, &small_grid()).unwrap());
    let mut g = c.benchmark_group("apply_phi");
    g.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        let op = PhiOperator::new(&pr, grid.clone(), &QuadSpec::duhamel_default().with_execution(exec)).unwrap();
        let u = op.initial().unwrap();
        g.bench_function(format!("{exec:?}"), |b| b.iter(|| op.apply(&u).unwrap()));
    }
    g.finish();
}

fn audit_sampling(c: &mut Criterion) {
    let mut g = c.benchmark_group("audit_midpoint_2000");
    for exec in [Execution::Sequential, Execution::Parallel] {
        let spec = SampleSpec { execution: exec, ..SampleSpec::default().with_samples(2000) };
        g.bench_function(format!("{exec:?}"), |b| b.iter(|| audit_inequality(AuditTarget::MidpointBound, &spec, 1).unwrap()));
    }
    g.finish();
}

fn small_sweep(c: &mut Criterion) {
    let mut g = c.benchmark_group("sweep_2x2");
    g.sample_size(10);
    for (name, workers, exec) in [("sequential", 1, Execution::Sequential), ("parallel", 2, Execution::Parallel)] {
        let mut cfg = SweepConfig::from_toml_str("[problem]\np = 4.0\nz = 1.0\n\n[axes]\na = [0.6666666666666666, 0.8]\nc = [0.01, 0.05]\n").unwrap();
        cfg.grid = small_grid();
        cfg.workers = workers;
        cfg.quad.execution = exec;
        g.bench_function(name, |b| b.iter(|| sweep(&cfg).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, apply_phi, audit_sampling, small_sweep);
criterion_main!(benches);
