use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mdiqkd::decoy::FiniteKeyConfig;
use mdiqkd::montecarlo::{Basis, MonteCarlo};
use mdiqkd::optimizer::{scan, Optimizer, Strategy};
use mdiqkd::physics::SystemModel;
use mdiqkd::Execution;
use std::hint::black_box;

const MODES: [Execution; 2] = [Execution::Sequential, Execution::Parallel];

fn monte_carlo(c: &mut Criterion) {
    let model = SystemModel::experimental(0.0, 50.0);
    let mut group = c.benchmark_group("monte_carlo_x_pair");
    group.sample_size(10);
    for mode in MODES {
        let mc = MonteCarlo {
            execution: mode,
            ..MonteCarlo::new(1 << 20, 1)
        };
        group.bench_with_input(BenchmarkId::from_parameter(format!("{mode:?}")), &mc, |b, mc| {
            b.iter(|| mc.pulse_pair(&model, Basis::X, black_box(0.3), 0.6).unwrap())
        });
    }
    group.finish();
}

fn distance_scan(c: &mut Criterion) {
    let model = SystemModel::experimental(10.0, 10.0);
    let lengths: Vec<(f64, f64)> = (0..8).map(|i| (10.0, 30.0 + 10.0 * i as f64)).collect();
    let fk = FiniteKeyConfig::finite(1e-10);
    let mut group = c.benchmark_group("scan_8_points");
    group.sample_size(10);
    for mode in MODES {
        let optimizer = Optimizer {
            execution: mode,
            ..Optimizer::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(format!("{mode:?}")), &optimizer, |b, o| {
            b.iter(|| scan(&model, &lengths, &Strategy::ALL, &fk, 1, o).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, monte_carlo, distance_scan);
criterion_main!(benches);
