use criterion::{black_box, criterion_group, criterion_main, Criterion};
use eshape_bench::{pendulum, sample_points};
use eshape_core::{
    frame_at, g_scalar, parse, solve_kinetic_1dou, synthesize, Expr, PipelineOptions,
};

fn expressions(c: &mut Criterion) {
    let spec = pendulum();
    let h11 = spec.mass_inverse()[0][0].clone();
    let compiled = h11.compile(spec.coords(), spec.constants()).unwrap();
    c.bench_function("parse mass_inverse entry", |b| {
        b.iter(|| parse(black_box("C/(A*C - B^2*cos(psi - phi)^2)")).unwrap())
    });
    c.bench_function("compiled eval", |b| {
        b.iter(|| compiled.eval(black_box(&[0.1, -0.05])).unwrap())
    });
    c.bench_function("symbolic diff", |b| b.iter(|| black_box(&h11).diff("x")));
}

fn geometry(c: &mut Criterion) {
    let spec = pendulum();
    let pts = sample_points(16);
    c.bench_function("frame_at x16", |b| {
        b.iter(|| {
            pts.iter()
                .map(|q| frame_at(&spec, q).unwrap().p_hat[(0, 0)])
                .sum::<f64>()
        })
    });
    c.bench_function("g_scalar x16", |b| {
        b.iter(|| pts.iter().map(|q| g_scalar(&spec, q).unwrap()).sum::<f64>())
    });
}

fn kinetic_and_potential(c: &mut Criterion) {
    let spec = pendulum();
    let sol = solve_kinetic_1dou(spec.clone(), Expr::Num(1.0)).unwrap();
    c.bench_function("k_at", |b| {
        b.iter(|| sol.k_at(black_box(&[0.1, 0.05])).unwrap())
    });
    let s = synthesize(&spec, &PipelineOptions::default()).unwrap();
    c.bench_function("hhat eval", |b| {
        b.iter(|| s.hhat.eval(black_box(&[0.1, 0.05])).unwrap())
    });
}

fn pipeline(c: &mut Criterion) {
    let spec = pendulum();
    let mut group = c.benchmark_group("pipeline");
    group.sample_size(10);
    group.bench_function("synthesize pendulum", |b| {
        b.iter(|| {
            synthesize(&spec, &PipelineOptions::default())
                .unwrap()
                .certificate
                .varpi
        })
    });
    group.finish();
}

criterion_group!(
    benches,
    expressions,
    geometry,
    kinetic_and_potential,
    pipeline
);
criterion_main!(benches);
