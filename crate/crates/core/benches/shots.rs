//! Monte Carlo throughput, sequential against the rayon pool.

use compass_core::circuit::Basis;
use compass_core::code::Deformation;
use compass_core::decoder::{Cell, CellSpec, DecoderKind, NoiseModel};
use compass_core::exec::{set_parallelism, Parallelism};
use compass_core::noise::NoiseParams;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

const SHOTS: usize = 512;

fn cell(model: NoiseModel, d: usize) -> Cell {
    let p = if model == NoiseModel::Hbd { 0.005 } else { 0.05 };
    let params = NoiseParams::new(p, 10.0).unwrap();
    Cell::new(CellSpec { d, ell: 2, deformation: Deformation::ZxxzSquare, model, params, basis: Basis::Z, rounds: d }).unwrap()
}

fn modes() -> [(&'static str, Parallelism); 2] {
    [("sequential", Parallelism::Sequential), ("rayon", Parallelism::Rayon)]
}

fn sampling(c: &mut Criterion) {
    let mut group = c.benchmark_group("sample");
    group.throughput(Throughput::Elements(SHOTS as u64));
    for d in [3, 5] {
        let cell = cell(NoiseModel::Hbd, d);
        for (name, mode) in modes() {
            group.bench_with_input(BenchmarkId::new(name, d), &cell, |b, cell| {
                set_parallelism(mode);
                b.iter(|| cell.sample(SHOTS, 7));
            });
        }
    }
    group.finish();
}

fn decoding(c: &mut Criterion) {
    let mut group = c.benchmark_group("decode");
    group.throughput(Throughput::Elements(SHOTS as u64));
    for (model, kind) in [(NoiseModel::CodeCapacity, DecoderKind::Mwpm), (NoiseModel::Hbd, DecoderKind::Mwpm), (NoiseModel::Hbd, DecoderKind::Corr)] {
        let cell = cell(model, 5);
        let batch = cell.sample(SHOTS, 11);
        for (name, mode) in modes() {
            let id = BenchmarkId::new(name, format!("{model:?}/{kind}"));
            group.bench_function(id, |b| {
                set_parallelism(mode);
                b.iter(|| cell.predict_batch(kind, &batch).unwrap());
            });
        }
    }
    group.finish();
    set_parallelism(Parallelism::Rayon);
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = sampling, decoding
}
criterion_main!(benches);
