use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use torlab::cones::{verify_cone_field, ConeSpec, GridSpec};
use torlab::estimators::{lyapunov_qr, markov_pruned_entropy, separated_set_entropy, MarkovPartition};
use torlab::homology::{exterior_power, homological_entropy};
use torlab::torus_maps::{quartic, DerivedMap, DerivedParams, LinearMap, TorusPoint, DEFAULT_QUARTIC};
use torlab::IntMatrix;

fn cat() -> IntMatrix {
    IntMatrix::from_i64(&[&[2, 1], &[1, 1]])
}

fn homology(c: &mut Criterion) {
    let a = quartic::companion(DEFAULT_QUARTIC).direct_sum(&cat());
    c.bench_function("exterior_power 6x6 k=3", |b| b.iter(|| exterior_power(black_box(&a), 3).unwrap()));
    c.bench_function("homological_entropy 6x6", |b| b.iter(|| homological_entropy(black_box(&a)).unwrap()));
}

fn estimators(c: &mut Criterion) {
    let map = LinearMap::new(cat()).unwrap();
    let part = MarkovPartition::cat();
    c.bench_function("markov_pruned_entropy depth 8", |b| b.iter(|| markov_pruned_entropy(&part, [0.0, 0.0], black_box(0.02), 8).unwrap()));
    c.bench_function("separated_set_entropy n=10 20k samples", |b| b.iter(|| separated_set_entropy(&map, 10, black_box(0.05), 20_000, 1).unwrap()));
    let x = TorusPoint(vec![0.3, 0.6]);
    c.bench_function("lyapunov_qr cat N=1e4", |b| b.iter(|| lyapunov_qr(&map, black_box(&x), 10_000, 100, 1).unwrap()));
    let f = DerivedMap::new(DerivedParams::default()).unwrap();
    let y = TorusPoint(vec![0.1, 0.2, 0.3, 0.4]);
    c.bench_function("lyapunov_qr derived N=2000", |b| b.iter(|| lyapunov_qr(&f, black_box(&y), 2000, 100, 1).unwrap()));
}

fn cones(c: &mut Criterion) {
    let a = cat().direct_sum(&cat());
    let f = LinearMap::new(a).unwrap();
    let cone = ConeSpec::new(4, &[0, 2], &[], 0.5, 0.5).unwrap();
    let grid = GridSpec::uniform(4, 5);
    c.bench_function("verify_cone_field 5^4 grid", |b| b.iter(|| verify_cone_field(&f, &cone, 1, black_box(&grid), 8).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = homology, estimators, cones
}
criterion_main!(benches);
