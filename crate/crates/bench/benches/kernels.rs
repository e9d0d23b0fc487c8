//! Hot paths: eta evaluation drives everything downstream (CM values,
//! traces, cusp checks), series multiplication drives the construction
//! and Borcherds expansion, and class enumeration gates every trace.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rug::Rational;
use thetalift::cmeval::eval_eta;
use thetalift::numctx::{BigComplex, Precision};
use thetalift::quadforms::{enumerate_classes, Sign};
use thetalift::traces::{trace, F6};

fn eta_evaluation(c: &mut Criterion) {
    let mut g = c.benchmark_group("eta");
    for bits in [128u32, 256, 512] {
        let prec = Precision::new(bits).unwrap();
        // a generic point of the fundamental domain, no special symmetry
        let z = BigComplex::from_f64(0.137, 1.291, bits);
        g.bench_function(format!("{bits} bits"), |b| {
            b.iter(|| eval_eta(&z, prec).unwrap())
        });
    }
    g.finish();
}

fn single_trace(c: &mut Criterion) {
    // tr_{F6}(-23, 1): class number 3 on each side, the workhorse of the
    // mock theta coefficient computations
    let prec = Precision::new(256).unwrap();
    c.bench_function("trace F6 D=-23", |b| {
        b.iter(|| trace(&F6, 6, -23, 1, prec).unwrap())
    });
}

fn series_multiplication(c: &mut Criterion) {
    let f = thetalift::qseries::eta_quotient_series(
        &[(1u32, 3i64), (2, -1), (5, 1), (10, -3)].into_iter().collect(),
        400,
    )
    .unwrap()
    .normalize_den();
    let g2 = f.clone();
    c.bench_function("series mul 400 terms", |b| {
        b.iter_batched(
            || (f.clone(), g2.clone()),
            |(a, b2)| a.mul(&b2),
            BatchSize::SmallInput,
        )
    });
    let s = Rational::from((-9, 1));
    c.bench_function("shifted power 400 terms", |b| {
        b.iter_batched(
            || f.clone(),
            |mut a| {
                a.add_to_coeff(0, &s);
                a.mul(&f).truncate_to(401)
            },
            BatchSize::SmallInput,
        )
    });
}

fn class_enumeration(c: &mut Criterion) {
    let mut g = c.benchmark_group("classes");
    for d in [-10007i64, -100003] {
        g.bench_function(format!("level 1, D = {d}"), |b| {
            b.iter(|| enumerate_classes(1, d, 1, Sign::Plus).unwrap())
        });
    }
    g.bench_function("level 6, D = -9599", |b| {
        b.iter(|| enumerate_classes(6, -9599, 1, Sign::Plus).unwrap())
    });
    g.finish();
}

criterion_group!(
    kernels,
    eta_evaluation,
    single_trace,
    series_multiplication,
    class_enumeration
);
criterion_main!(kernels);
