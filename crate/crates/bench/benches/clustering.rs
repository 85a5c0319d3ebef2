use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use perclab_core::{
    derive_stream, find_clusters, sample_poisson, top_clusters, Aabb, LocalScorer, PointSet,
};

fn sample(n: f64) -> PointSet {
    let bbox = Aabb::centered_cube(2, n).unwrap();
    sample_poisson(&bbox, 2.0, &mut derive_stream(1, 0)).unwrap()
}

fn sampling(c: &mut Criterion) {
    let bbox = Aabb::centered_cube(2, 100.0).unwrap();
    c.bench_function("sample_poisson n=100", |b| {
        b.iter(|| sample_poisson(&bbox, 2.0, &mut derive_stream(1, 0)).unwrap())
    });
}

fn clustering(c: &mut Criterion) {
    let mut g = c.benchmark_group("find_clusters");
    for n in [50.0, 100.0, 200.0] {
        let ps = sample(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &ps, |b, ps| {
            b.iter(|| top_clusters(&find_clusters(ps, 1.0).unwrap()))
        });
    }
    g.finish();
}

fn localized(c: &mut Criterion) {
    let mut g = c.benchmark_group("localized_total n=60");
    g.sample_size(10);
    let ps = sample(60.0);
    for theta in [0.5, 1.0, 2.0, 4.0] {
        let mut scorer = LocalScorer::new(&ps, theta, 1.0).unwrap();
        g.bench_with_input(BenchmarkId::new("blocks", theta), &theta, |b, _| {
            b.iter(|| scorer.total())
        });
        scorer.set_block_cells(0);
        g.bench_with_input(BenchmarkId::new("per-window", theta), &theta, |b, _| {
            b.iter(|| scorer.total())
        });
    }
    g.finish();
}

criterion_group!(benches, sampling, clustering, localized);
criterion_main!(benches);
