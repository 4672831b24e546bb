use std::hint::black_box;

use attrforge::capacity::{unit_ball_packing, NormPair};
use attrforge::covering::{fit_certificate, APolicy};
use attrforge::metric::{box_counting_dimension, greedy_net};
use attrforge::semigroup::{omega_limit_sample, step, uniform_box};
use attrforge::{make_system, Params};
use criterion::{criterion_group, criterion_main, Criterion};

fn henon_cloud(n: usize) -> attrforge::FinitePointSet {
    let sys = make_system("henon", &Params::new()).unwrap();
    let seeds = uniform_box(&[0.0, 0.0], 0.5, 4, 1).unwrap();
    omega_limit_sample(&sys, &seeds, 500, n / 4, 1.0).unwrap()
}

fn nets(c: &mut Criterion) {
    let g = henon_cloud(20_000);
    c.bench_function("greedy_net henon 20k eps=0.01", |b| b.iter(|| greedy_net(black_box(&g), 0.01, None).unwrap()));
    let grid: Vec<f64> = (0..8).map(|i| 0.1 * 0.05f64.powf(i as f64 / 7.0)).collect();
    c.bench_function("box_counting henon 20k", |b| b.iter(|| box_counting_dimension(black_box(&g), &grid).unwrap()));
}

fn covering(c: &mut Criterion) {
    let sys = make_system("henon", &Params::new()).unwrap();
    let b = henon_cloud(1_000);
    let qs: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
    c.bench_function("fit_certificate henon |B|=1000 kmax=10", |bch| {
        bch.iter(|| fit_certificate(&sys, black_box(&b), 1.0, 1, 10, &qs, APolicy::Default).unwrap())
    });
}

fn packing(c: &mut Criterion) {
    let pair = NormPair::euclidean(2);
    c.bench_function("unit_ball_packing l2 n=2 eps=0.5", |b| {
        b.iter(|| unit_ball_packing(&pair, black_box(0.5), 20_000, 0).unwrap())
    });
}

fn flows(c: &mut Criterion) {
    let lorenz = make_system("lorenz63_timeT", &Params::new()).unwrap();
    let x = uniform_box(&[0.0, 0.0, 25.0], 10.0, 256, 2).unwrap();
    c.bench_function("lorenz rk4 time-T step, 256 points", |b| b.iter(|| step(&lorenz, black_box(&x), 0.1).unwrap()));
    let chafee = make_system("chafee_infante_galerkin", &Params::new()).unwrap();
    let y = uniform_box(&[0.0; 4], 1.0, 256, 3).unwrap();
    c.bench_function("chafee rk4 time-T step, 256 points", |b| b.iter(|| step(&chafee, black_box(&y), 0.1).unwrap()));
}

criterion_group!(benches, nets, covering, packing, flows);
criterion_main!(benches);
