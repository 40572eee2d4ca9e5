use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lpf_core::models::{BodyModel, DiskModel};
use lpf_core::{lpf_step, pf_step, LatticeRule, ParticleSet, Resampling, StateSpaceModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn lattice_points(c: &mut Criterion) {
    let mut group = c.benchmark_group("lattice_points");
    for (n, dims) in [(256, 2), (4096, 10)] {
        let rule = LatticeRule::from_table(n, dims, vec![0.25; dims]).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(format!("n{n}_s{dims}")), &rule, |b, rule| {
            let mut row = vec![0.0; dims];
            b.iter(|| {
                for i in 0..rule.n() {
                    rule.point_into(i, &mut row);
                    black_box(&row);
                }
            })
        });
    }
    group.finish();
}

fn disk_likelihood(c: &mut Criterion) {
    let model = DiskModel::default();
    let frame = model.observe(&[64.0, 64.0], &mut ChaCha8Rng::seed_from_u64(1));
    c.bench_function("disk_log_likelihood", |b| {
        b.iter(|| model.log_likelihood(black_box(&frame), black_box(&[61.7, 66.2])))
    });
}

fn steps<M: StateSpaceModel>(c: &mut Criterion, name: &str, model: &M, y: &M::Observation, start: &[f64], n: usize) {
    let particles = ParticleSet::replicate(start, n);
    let rule = LatticeRule::from_table(n, model.state_dim(), vec![0.0; model.state_dim()]).unwrap();
    let mut group = c.benchmark_group(name);
    group.bench_function("pf_step", |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        b.iter(|| pf_step(&particles, y, model, Resampling::Residual, &mut rng, 1).unwrap())
    });
    group.bench_function("lpf_step", |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        b.iter(|| lpf_step(&particles, y, model, Resampling::Residual, &rule, &mut rng, 1).unwrap())
    });
    group.finish();
}

fn filter_steps(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let disk = DiskModel::default();
    let frame = disk.observe(&[66.0, 62.0], &mut rng);
    steps(c, "disk_n64", &disk, &frame, &[64.0, 64.0], 64);

    let body = BodyModel::default();
    let pose = [0.05; 10];
    let obs = body.simulate_observation(&pose, &mut rng);
    steps(c, "body_n256", &body, &obs, &[0.0; 10], 256);
}

criterion_group!(benches, lattice_points, disk_likelihood, filter_steps);
criterion_main!(benches);
