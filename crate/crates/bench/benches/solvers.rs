use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use invlabel::evp::DEFAULT_DELTA;
use invlabel::{kernel_matrix, solve_bvp, solve_evp, validate_model, BirkhoffConfig, MapSpec};
use invlabel_bench::{perturbed_pendulum, standard_map};

fn bench_kernel_matrix(c: &mut Criterion) {
    let mut group = c.benchmark_group("kernel_matrix");
    for n in [250, 500, 1000] {
        let (s, k, _) = standard_map(0.7, n);
        group.bench_with_input(BenchmarkId::from_parameter(2 * n), &s, |b, s| {
            b.iter(|| kernel_matrix(&k, s.points(), s.topology()))
        });
    }
    group.finish();
}

fn bench_sampling(c: &mut Criterion) {
    c.bench_function("sample_perturbed_pendulum_1000", |b| {
        b.iter(|| perturbed_pendulum(1000))
    });
}

fn bench_bvp(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_bvp");
    group.sample_size(10);
    for n in [250, 500] {
        let (s, k, bd) = standard_map(0.7, n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &s, |b, s| {
            b.iter(|| solve_bvp(s, &k, &bd, 1e-5).expect("solves"))
        });
    }
    group.finish();
}

fn bench_evp(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_evp");
    group.sample_size(10);
    for n in [500, 1000] {
        let (s, k, bd) = perturbed_pendulum(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &s, |b, s| {
            b.iter(|| solve_evp(s, &k, &bd, 1e-8, DEFAULT_DELTA, 8).expect("solves"))
        });
    }
    group.finish();
}

fn bench_validation(c: &mut Criterion) {
    let (s, k, bd) = standard_map(0.7, 250);
    let (model, _) = solve_bvp(&s, &k, &bd, 1e-5).expect("solves");
    let map = MapSpec::standard(0.7);
    let mut group = c.benchmark_group("validate");
    group.sample_size(10);
    group.bench_function("j100_t100", |b| {
        b.iter(|| {
            validate_model(
                &model,
                &map,
                s.domain(),
                100,
                &BirkhoffConfig { t: 100 },
                1 << 16,
            )
            .expect("scores")
        })
    });
    group.finish();
}

criterion_group!(kernels, bench_kernel_matrix, bench_sampling);
criterion_group!(solvers, bench_bvp, bench_evp, bench_validation);
criterion_main!(kernels, solvers);
