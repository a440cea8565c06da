use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use framelab_bench::lattice_disc;
use framelab_core::density::DensitySchedule;
use framelab_core::quad::integrate_ball;
use framelab_core::{density, Ball, KernelSpec, Lattice, MeasureSpec, QuadConfig};

fn gram(c: &mut Criterion) {
    let mut g = c.benchmark_group("normalized_gram");
    for r in [3.0, 5.0, 8.0] {
        let pts = lattice_disc(0.8, r);
        let refs: Vec<&[f64]> = pts.iter().map(|p| &p[..]).collect();
        for (name, k) in [("fock", KernelSpec::Fock), ("gabor", KernelSpec::GaborGaussian { n: 1 })] {
            g.bench_with_input(BenchmarkId::new(name, refs.len()), &refs, |b, refs| {
                b.iter(|| k.normalized_gram(black_box(refs)))
            });
        }
    }
    g.finish();
}

fn jacobi(c: &mut Criterion) {
    let mut g = c.benchmark_group("hermitian_eigen");
    g.sample_size(10);
    for r in [3.0, 5.0, 8.0] {
        let pts = lattice_disc(0.8, r);
        let refs: Vec<&[f64]> = pts.iter().map(|p| &p[..]).collect();
        let m = KernelSpec::Fock.normalized_gram(&refs);
        g.bench_with_input(BenchmarkId::from_parameter(refs.len()), &m, |b, m| {
            b.iter(|| black_box(m).eigenvalues_hermitian().unwrap())
        });
    }
    g.finish();
}

fn quadrature(c: &mut Criterion) {
    let mut g = c.benchmark_group("integrate_ball");
    let leb = MeasureSpec::lebesgue(2);
    let f = |y: &[f64]| KernelSpec::Fock.modulus_sq(&[0.1, 0.2], y);
    for h in [0.1, 0.05, 0.02] {
        let b = Ball::centered(&[0.0, 0.0], 2.0).unwrap();
        let cfg = QuadConfig::new(h, 8.0);
        g.bench_with_input(BenchmarkId::from_parameter(h), &cfg, |bench, cfg| {
            bench.iter(|| integrate_ball(&f, black_box(&b), &leb, cfg).unwrap())
        });
    }
    g.finish();
}

fn lattice_density(c: &mut Criterion) {
    let leb = MeasureSpec::lebesgue(2);
    let lat = MeasureSpec::counting_lattice(Lattice::new(0.5, 2).unwrap());
    let sched = DensitySchedule::default_for(&lat, &leb, 128.0).unwrap();
    c.bench_function("density_0.5Z2_rmax128", |b| b.iter(|| density(black_box(&lat), &leb, &sched).unwrap()));
}

criterion_group!(benches, gram, jacobi, quadrature, lattice_density);
criterion_main!(benches);
