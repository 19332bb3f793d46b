//! Whole-stream replay time of each engine on Euclidean grid streams.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dynclust::HashFamilyKind;
use dynclust::{
    KCenterConfig, KCenterEngine, LshConfig, LshKCenter, SumRadiiConfig, SumRadiiEngine, TreeConfig, TreeEngine,
};
use dynclust_bench::{grid_range, grid_stream};

const K: usize = 8;
const EPS: f64 = 0.5;

fn engines(c: &mut Criterion) {
    let (lo, hi) = grid_range();
    let mut group = c.benchmark_group("replay");
    group.sample_size(10);
    for n in [256usize, 1024] {
        let (oracle, ops) = grid_stream(n, 1);
        group.bench_with_input(BenchmarkId::new("lfmis-kcenter", n), &n, |b, _| {
            b.iter(|| {
                let mut e = KCenterEngine::new(KCenterConfig::new(K, EPS, lo, hi, 1)).unwrap();
                for &op in &ops {
                    black_box(e.update(op, &oracle).unwrap());
                }
            })
        });
        group.bench_with_input(BenchmarkId::new("lsh-kcenter", n), &n, |b, _| {
            let lsh = LshConfig { kind: HashFamilyKind::PStableL2, c: 2.0, delta: 0.1, dim: 2 };
            b.iter(|| {
                let mut e = LshKCenter::new(KCenterConfig::new(K, EPS, lo, hi, 1), lsh).unwrap();
                for &op in &ops {
                    black_box(e.update(op, &oracle).unwrap());
                }
            })
        });
        group.bench_with_input(BenchmarkId::new("det-tree", n), &n, |b, _| {
            b.iter(|| {
                let mut e = TreeEngine::new(TreeConfig::new(K, EPS, 2, lo, hi)).unwrap();
                for &op in &ops {
                    black_box(e.update(op, &oracle).unwrap());
                }
            })
        });
    }
    let (oracle, ops) = grid_stream(128, 1);
    group.bench_function("sum-radii/128", |b| {
        b.iter(|| {
            let mut e = SumRadiiEngine::new(SumRadiiConfig::new(K, EPS, lo, hi, 1)).unwrap();
            for &op in &ops {
                black_box(e.update(op, &oracle).unwrap());
            }
        })
    });
    group.finish();
}

criterion_group!(benches, engines);
criterion_main!(benches);
