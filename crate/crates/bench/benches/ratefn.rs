use brwlab::ratefn::{legendre_1d, legendre_nd, solve_constants};
use brwlab::{IncrementLaw, OffspringLaw};
use brwlab_bench::gaussian_binary;
use criterion::{criterion_group, criterion_main, Criterion};

fn conjugates(c: &mut Criterion) {
    let uniform = IncrementLaw::uniform_cube(1, 1.0).unwrap();
    c.bench_function("legendre_1d_uniform", |b| b.iter(|| legendre_1d(&uniform, &[1.0], 0.7).unwrap()));
    let aniso = IncrementLaw::anisotropic_gaussian(vec![1.0, 0.5, 2.0]).unwrap();
    c.bench_function("legendre_nd_anisotropic", |b| b.iter(|| legendre_nd(&aniso, &[0.8, 0.1, -0.3]).unwrap()));
}

fn constants(c: &mut Criterion) {
    let (inc, off) = gaussian_binary(3);
    c.bench_function("solve_constants_gaussian_3d", |b| b.iter(|| solve_constants(&inc, &off).unwrap()));
    let ball = IncrementLaw::uniform_ball(2, 1.0).unwrap();
    let off3 = OffspringLaw::from_pairs(&[(1, 0.5), (3, 0.5)]).unwrap();
    c.bench_function("solve_constants_ball_2d", |b| b.iter(|| solve_constants(&ball, &off3).unwrap()));
}

criterion_group!(benches, conjugates, constants);
criterion_main!(benches);
