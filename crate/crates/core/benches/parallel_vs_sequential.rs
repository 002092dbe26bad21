use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use forcemeter::oracle::{benchmark_config, benchmark_model, cavity_amplitude, evolve_stochastic, TrajectoryEnsemble, TruncatedSpace};
use forcemeter::par::with_threads;
use forcemeter::params::{ligo_defaults, LIGO_STRAIN};
use forcemeter::sensitivity::{sweep_grid, sweep_grid_sequential, Axis, Detector, GWSource, SweepSpec};

fn sweep(c: &mut Criterion) {
    let (p, f, k) = ligo_defaults();
    let det = Detector::new(&p, &GWSource::from_force(&f, &p).unwrap(), &k).unwrap();
    let spec = SweepSpec {
        t: Axis::log(0.01, 1e4, 200),
        photons: Axis::log(1e6, 1e20, 200),
        h: Axis::log(LIGO_STRAIN / 10.0, LIGO_STRAIN * 10.0, 5),
    };
    let mut group = c.benchmark_group("sweep_200x200x5");
    group.bench_function("sequential", |b| b.iter(|| sweep_grid_sequential(&det, &spec).unwrap()));
    group.bench_function("parallel", |b| b.iter(|| sweep_grid(&det, &spec).unwrap()));
    group.finish();
}

fn ensemble(c: &mut Criterion) {
    let model = benchmark_model();
    let cfg = benchmark_config();
    let space = TruncatedSpace::new(10, 10).unwrap();
    let ens = TrajectoryEnsemble::new(256, 0, 0.01).unwrap();
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut group = c.benchmark_group("ensemble_256");
    group.sample_size(10);
    for workers in [1, threads] {
        group.bench_with_input(BenchmarkId::new("workers", workers), &workers, |b, &w| {
            b.iter(|| with_threads(w, || evolve_stochastic(&ens, &model, &space, cavity_amplitude(&cfg), 1.0).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, sweep, ensemble);
criterion_main!(benches);
