use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use motionaware_bench::Fixture;
use motionaware_core::kf::run_bank;
use motionaware_core::{build_field, derive_velocities, segment, GpModel, MaskPolicy, SlicParams};
use std::hint::black_box;

fn gp(c: &mut Criterion) {
    let fx = Fixture::patrol();
    let pairs = derive_velocities(&fx.train).expect("velocities");
    let queries = fx.grid.cell_centers();

    let mut group = c.benchmark_group("gp");
    group.sample_size(10);
    for n in [250, 500, 1000] {
        let step = pairs.len() / n;
        let (xs, ys): (Vec<_>, Vec<_>) = pairs.iter().step_by(step).take(n).map(|(p, v)| (*p, v.x)).unzip();
        group.bench_with_input(BenchmarkId::new("fit", n), &n, |b, _| {
            b.iter(|| GpModel::fit(black_box(&xs), black_box(&ys), fx.hyper).unwrap())
        });
        let model = GpModel::fit(&xs, &ys, fx.hyper).unwrap();
        group.bench_with_input(BenchmarkId::new("predict_grid", n), &n, |b, _| {
            b.iter(|| model.predict(black_box(&queries)))
        });
    }
    group.bench_function("build_field", |b| {
        b.iter(|| build_field(std::slice::from_ref(&fx.train), &fx.grid, fx.hyper, MaskPolicy::default(), Some(1500)).unwrap())
    });
    group.finish();
}

fn zones(c: &mut Criterion) {
    let fx = Fixture::patrol();
    let params = SlicParams::default();
    c.bench_function("segment", |b| {
        b.iter(|| segment(black_box(&fx.field), black_box(&fx.image), &params).unwrap())
    });
}

fn detection(c: &mut Criterion) {
    let fx = Fixture::patrol();
    c.bench_function("run_bank", |b| {
        b.iter(|| run_bank(black_box(&fx.test), &fx.zones, &fx.grid, &fx.dynamics, &fx.detector).unwrap())
    });
}

criterion_group!(benches, gp, zones, detection);
criterion_main!(benches);
