use super::dataset::Dataset;
use super::train::{train, TrainConfig, TrainHistory};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::graph::SpatialGraph;

/// Per-epoch summary of the validation error across runs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunEnvelope {
    /// Seeds of the runs that completed, in input order.
    pub seeds: Vec<u64>,
    pub mean: Vec<f64>,
    /// Population standard deviation.
    pub std: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl RunEnvelope {
    pub fn epochs(&self) -> usize {
        self.mean.len()
    }

    /// Envelope of `abs_error` over the given histories (equal lengths).
    pub fn from_histories(histories: &[TrainHistory]) -> Result<Self> {
        let first = histories
            .first()
            .ok_or(Error::EmptyIndexSet("no completed runs"))?;
        let epochs = first.abs_error.len();
        if let Some(h) = histories.iter().find(|h| h.abs_error.len() != epochs) {
            return Err(Error::DimensionMismatch {
                context: "history length",
                expected: epochs,
                found: h.abs_error.len(),
            });
        }
        let r = histories.len() as f64;
        let mut env = RunEnvelope {
            seeds: histories.iter().map(|h| h.seed).collect(),
            mean: Vec::with_capacity(epochs),
            std: Vec::with_capacity(epochs),
            min: Vec::with_capacity(epochs),
            max: Vec::with_capacity(epochs),
        };
        for e in 0..epochs {
            let vals = histories.iter().map(|h| h.abs_error[e]);
            let mean = vals.clone().sum::<f64>() / r;
            let var = vals.clone().map(|v| (v - mean) * (v - mean)).sum::<f64>() / r;
            env.mean.push(mean);
            env.std.push(var.sqrt());
            env.min.push(vals.clone().fold(f64::INFINITY, f64::min));
            env.max.push(vals.fold(f64::NEG_INFINITY, f64::max));
        }
        Ok(env)
    }
}

/// Result of a batch of independent runs.
#[derive(Debug)]
pub struct MultiRun {
    pub envelope: RunEnvelope,
    /// Completed histories, in seed order.
    pub histories: Vec<TrainHistory>,
    /// Runs that failed, with their seed.
    pub failures: Vec<(u64, Error)>,
}

/// Train once per seed; each run re-draws its split, initialization and
/// dropout masks from its own seed.
pub fn multi_run(
    dataset: &Dataset,
    graph: &SpatialGraph,
    config: &TrainConfig,
    seeds: &[u64],
    exec: Execution,
) -> Result<MultiRun> {
    if seeds.is_empty() {
        return Err(Error::InvalidParameter(
            "at least one run is required".into(),
        ));
    }
    for (i, s) in seeds.iter().enumerate() {
        if seeds[..i].contains(s) {
            return Err(Error::InvalidParameter(format!("duplicate seed {s}")));
        }
    }
    config.validate()?;
    let results = exec.map_range(seeds.len(), |k| {
        let cfg = TrainConfig {
            seed: seeds[k],
            ..config.clone()
        };
        train(dataset, graph, &cfg).map(|o| o.history)
    });
    let mut histories = Vec::new();
    let mut failures = Vec::new();
    for (seed, r) in seeds.iter().zip(results) {
        match r {
            Ok(h) => histories.push(h),
            Err(e) => {
                log::warn!("run with seed {seed} failed: {e}");
                failures.push((*seed, e));
            }
        }
    }
    if histories.is_empty() {
        let (seed, e) = failures.remove(0);
        log::error!(
            "all {} runs failed; first failure at seed {seed}",
            seeds.len()
        );
        return Err(e);
    }
    let envelope = RunEnvelope::from_histories(&histories)?;
    Ok(MultiRun {
        envelope,
        histories,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::synth::{synth_generate, SynthSpec};
    use crate::graph::buffer_adjacency;

    fn small() -> (Dataset, SpatialGraph) {
        let spec = SynthSpec {
            n_points: 120,
            n_clusters: 3,
            width: 3000.0,
            height: 3000.0,
            ..Default::default()
        };
        let (p, truth) = synth_generate(&spec).unwrap();
        let g = buffer_adjacency(&p, 600.0).unwrap();
        (Dataset::from_points(p, truth.type_names).unwrap(), g)
    }

    fn cfg() -> TrainConfig {
        TrainConfig {
            epochs: 15,
            train_fraction: 0.2,
            ..Default::default()
        }
    }

    #[test]
    fn single_run_envelope_is_degenerate() {
        let (d, g) = small();
        let r = multi_run(&d, &g, &cfg(), &[3], Execution::Sequential).unwrap();
        let e = &r.envelope;
        assert_eq!(e.epochs(), 15);
        assert_eq!(e.min, e.mean);
        assert_eq!(e.max, e.mean);
        assert!(e.std.iter().all(|s| *s == 0.0));
    }

    #[test]
    fn parallel_equals_sequential_and_is_ordered() {
        let (d, g) = small();
        let seeds = [11, 4, 9, 100, 2];
        let a = multi_run(&d, &g, &cfg(), &seeds, Execution::Sequential).unwrap();
        let b = multi_run(&d, &g, &cfg(), &seeds, Execution::Parallel).unwrap();
        assert_eq!(a.envelope, b.envelope);
        assert_eq!(a.histories, b.histories);
        assert_eq!(a.envelope.seeds, seeds);
        for e in 0..a.envelope.epochs() {
            assert!(a.envelope.min[e] <= a.envelope.mean[e]);
            assert!(a.envelope.mean[e] <= a.envelope.max[e]);
        }
    }

    #[test]
    fn seed_list_validation() {
        let (d, g) = small();
        assert!(multi_run(&d, &g, &cfg(), &[], Execution::Sequential).is_err());
        assert!(multi_run(&d, &g, &cfg(), &[1, 1], Execution::Sequential).is_err());
    }

    #[test]
    fn failed_runs_are_recorded() {
        let (d, g) = small();
        let bad = TrainConfig {
            learning_rate: f64::MAX,
            dropout_p: 0.0,
            ..cfg()
        };
        assert!(matches!(
            multi_run(&d, &g, &bad, &[1, 2], Execution::Sequential),
            Err(Error::Divergence { .. })
        ));
    }
}
