//! Sequential vs rayon execution of the data-parallel kernels.
//!
//! `cargo bench --bench parallel_vs_sequential`; with
//! `--no-default-features` both variants run sequentially.

use std::hint::black_box;
use std::time::Duration;

use criterion::measurement::WallTime;
use criterion::{criterion_group, criterion_main, BenchmarkGroup, BenchmarkId, Criterion};
use spatial_gcn::exec::Execution;
use spatial_gcn::experiment::{multi_run, synth_generate, Dataset, SynthSpec, TrainConfig};
use spatial_gcn::graph::{
    buffer_adjacency_with, distance_matrix_with, propagation_operator, PointSet,
};
use spatial_gcn::io::raster_heatmap_with;
use spatial_gcn::linalg::DenseMatrix;

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn points(n: usize) -> PointSet {
    let spec = SynthSpec {
        n_points: n,
        ..Default::default()
    };
    synth_generate(&spec).unwrap().0
}

fn cap(g: &mut BenchmarkGroup<'_, WallTime>) {
    g.sample_size(10);
    g.measurement_time(Duration::from_secs(5));
}

fn bench_distances(c: &mut Criterion) {
    let mut g = c.benchmark_group("distance_matrix");
    cap(&mut g);
    for n in [1000, 3000] {
        let p = points(n);
        for (name, exec) in MODES {
            g.bench_with_input(BenchmarkId::new(name, n), &p, |b, p| {
                b.iter(|| distance_matrix_with(black_box(p), exec))
            });
        }
    }
    g.finish();
}

fn bench_buffer(c: &mut Criterion) {
    let mut g = c.benchmark_group("buffer_adjacency");
    cap(&mut g);
    for n in [2000, 6000] {
        let p = points(n);
        for (name, exec) in MODES {
            g.bench_with_input(BenchmarkId::new(name, n), &p, |b, p| {
                b.iter(|| buffer_adjacency_with(black_box(p), 600.0, exec).unwrap())
            });
        }
    }
    g.finish();
}

fn bench_spmm(c: &mut Criterion) {
    let mut g = c.benchmark_group("propagation_spmm");
    cap(&mut g);
    let p = points(6000);
    let op = propagation_operator(&buffer_adjacency_with(&p, 600.0, Execution::Parallel).unwrap());
    for h in [9, 32] {
        let x = DenseMatrix::from_fn(p.len(), h, |i, j| ((i * 31 + j * 7) % 13) as f64 / 13.0);
        for (name, exec) in MODES {
            g.bench_with_input(BenchmarkId::new(name, h), &x, |b, x| {
                b.iter(|| op.apply_dense_with(black_box(x), exec).unwrap())
            });
        }
    }
    g.finish();
}

fn bench_multi_run(c: &mut Criterion) {
    let mut g = c.benchmark_group("multi_run");
    cap(&mut g);
    let (p, truth) = synth_generate(&SynthSpec::default()).unwrap();
    let graph = buffer_adjacency_with(&p, 600.0, Execution::Parallel).unwrap();
    let data = Dataset::from_points(p, truth.type_names).unwrap();
    let cfg = TrainConfig {
        epochs: 50,
        ..Default::default()
    };
    let seeds: Vec<u64> = (1..=8).collect();
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new(name, seeds.len()), |b| {
            b.iter(|| multi_run(&data, &graph, &cfg, black_box(&seeds), exec).unwrap())
        });
    }
    g.finish();
}

fn bench_raster(c: &mut Criterion) {
    let mut g = c.benchmark_group("raster_heatmap");
    cap(&mut g);
    let p = points(2000);
    let v = p.intensity().unwrap().to_vec();
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new(name, "200m"), |b| {
            b.iter(|| raster_heatmap_with(&p, black_box(&v), 200.0, 300.0, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(
    benches,
    bench_distances,
    bench_buffer,
    bench_spmm,
    bench_multi_run,
    bench_raster
);
criterion_main!(benches);
