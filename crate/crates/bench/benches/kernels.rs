use std::hint::black_box;

use confmetric::mbeta::{build_mbeta, build_smoothed_cone};
use confmetric::potential::log_potential;
use confmetric::weights::grid_dijkstra;
use confmetric::{Dim, Point, Scenario};
use criterion::{criterion_group, criterion_main, Criterion};

fn potential(c: &mut Criterion) {
    let s = Scenario::GaussianBump { mass: 0.5, width: 0.2 };
    for dim in [Dim::Two, Dim::Four] {
        let mu = s.measure(dim).unwrap();
        c.bench_function(&format!("log_potential_n{}", dim.n()), |b| {
            b.iter(|| log_potential(black_box(&mu), Point::on_axis(1.3)).unwrap())
        });
    }
}

fn dijkstra(c: &mut Criterion) {
    let n = 161;
    let h = 2.0 / (n - 1) as f64;
    let density: Vec<f64> = (0..n * n)
        .map(|k| {
            let (i, j) = (k % n, k / n);
            let (x, y) = (-1.0 + i as f64 * h, -1.0 + j as f64 * h);
            (x * x + y * y).sqrt().max(1e-3)
        })
        .collect();
    c.bench_function("grid_dijkstra_161", |b| {
        b.iter(|| grid_dijkstra(n, n, h, h, black_box(&density), (0, 0), (n - 1, n / 2)))
    });
}

fn mbeta(c: &mut Criterion) {
    let cone = build_smoothed_cone(-0.5, 0.25).unwrap();
    let mut g = c.benchmark_group("build_mbeta");
    g.sample_size(10);
    for n in [2, 4] {
        g.bench_function(format!("n{n}"), |b| b.iter(|| build_mbeta(black_box(&cone), n).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, potential, dijkstra, mbeta);
criterion_main!(benches);
