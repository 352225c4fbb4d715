use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use conleylab::algebra::homology;
use conleylab::attractor::analyze;
use conleylab::blocks::build_block;
use conleylab::complex;
use conleylab::constructions::catalog_flow;
use conleylab::theorems::run_all;
use conleylab::Ring;

fn pipeline(c: &mut Criterion) {
    let mut g = c.benchmark_group("analyze");
    for (name, res) in [("example22-torus", 16), ("hypersurface-genus2", 8), ("homoclinic-sphere", 12)] {
        let cf = catalog_flow(name, res).unwrap();
        g.bench_with_input(BenchmarkId::new(name, res), &cf, |b, cf| b.iter(|| analyze(&cf.k, &cf.flow).unwrap()));
    }
    g.finish();

    let cf = catalog_flow("hypersurface-genus2-two", 8).unwrap();
    c.bench_function("block/hypersurface-genus2-two", |b| b.iter(|| build_block(&cf.k, &cf.flow, 1).unwrap()));
}

fn algebra(c: &mut Criterion) {
    let mut g = c.benchmark_group("homology");
    for name in ["torus", "genus2", "t3"] {
        let cx = complex::catalog(name, 8).unwrap();
        for ring in [Ring::Z, Ring::Z2] {
            g.bench_function(format!("{name}/{ring}"), |b| b.iter(|| homology(&cx, ring)));
        }
    }
    g.finish();
}

fn verify(c: &mut Criterion) {
    let mut g = c.benchmark_group("verify");
    g.sample_size(10);
    g.bench_function("run_all", |b| b.iter(|| run_all(None, 8).unwrap()));
    g.finish();
}

criterion_group!(benches, pipeline, algebra, verify);
criterion_main!(benches);
