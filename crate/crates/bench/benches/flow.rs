use criterion::{black_box, criterion_group, criterion_main, Criterion};

use filippov_bench::{pendulum_r2, poly_boundary};
use filippov_core::flow;
use filippov_core::retmap;
use filippov_core::Vec2;

fn bench_flow(c: &mut Criterion) {
    let z = pendulum_r2();
    c.bench_function("pendulum_first_return", |b| {
        b.iter(|| retmap::first_return(&z, black_box(-2.9)).unwrap())
    });
    let p = poly_boundary();
    c.bench_function("poly_integrate_10", |b| {
        b.iter(|| flow::integrate(&p, black_box(Vec2::new(0.1, 0.2)), 10.0, p.window).unwrap())
    });
    c.bench_function("poly_base_point", |b| b.iter(|| retmap::base_point(black_box(&p)).unwrap()));
}

criterion_group!(benches, bench_flow);
criterion_main!(benches);
