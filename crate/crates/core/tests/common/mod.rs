#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spatial_gcn::graph::SpatialGraph;

/// Random sparse weighted graph on `n` nodes.
pub fn random_graph(n: usize, edge_p: f64, rng: &mut ChaCha8Rng) -> SpatialGraph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < edge_p {
                edges.push((i, j, rng.random_range(0.05..3.0)));
            }
        }
    }
    SpatialGraph::from_edges(n, edges).unwrap()
}

/// The fixed suite of 25 graphs with 2 to 20 nodes.
pub fn graph_suite() -> Vec<SpatialGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    (0..25)
        .map(|_| {
            let n = rng.random_range(2..=20);
            let p = rng.random_range(0.1..0.6);
            random_graph(n, p, &mut rng)
        })
        .collect()
}

pub fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data")
}

pub fn shipped_dataset() -> PathBuf {
    data_dir().join("synth_seed7.csv")
}
