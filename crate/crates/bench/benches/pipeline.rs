//! Benchmarks for the hot paths: sheafification, pairing construction with
//! its kernels, and the rank-identity pipeline, on seeded random instances.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use sheafmod::instances as gen;
use sheafmod::{
    induced_quotient_pairing, sheafify, verify_rank_identities, Field, ModulePresheaf,
};
use std::hint::black_box;

fn bench_sheafify(c: &mut Criterion) {
    let mut rng = gen::rng(11);
    let st = gen::random_structure(&mut rng, Field::Rational, 5);
    let p = gen::random_presheaf(&mut rng, st, 3);
    c.bench_function("sheafify 5-point presheaf", |b| {
        b.iter(|| sheafify(black_box(&p)).unwrap())
    });
}

fn bench_pairing_kernels(c: &mut Criterion) {
    let mut rng = gen::rng(22);
    let st = gen::random_structure(&mut rng, Field::Rational, 5);
    let p = gen::random_degenerate_pairing(&mut rng, st, 4);
    c.bench_function("pairing kernels + induced quotient pairing", |b| {
        b.iter(|| {
            let k = p.left_kernel().unwrap();
            let ind = induced_quotient_pairing(black_box(&p)).unwrap();
            black_box((k, ind))
        })
    });
}

fn bench_rank_identities(c: &mut Criterion) {
    let mut rng = gen::rng(33);
    let st = gen::random_structure(&mut rng, Field::Prime(101), 5);
    let e = ModulePresheaf::free(st, 4);
    c.bench_function("rank identities on random free submodules", |b| {
        b.iter_batched(
            || {
                (
                    gen::random_constant_submodule(&mut rng, &e),
                    gen::random_constant_submodule(&mut rng, &e),
                )
            },
            |(f, g)| verify_rank_identities(black_box(&f), black_box(&g)).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, bench_sheafify, bench_pairing_kernels, bench_rank_identities);
criterion_main!(benches);
