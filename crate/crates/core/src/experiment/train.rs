use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use super::dataset::{predicted_counts, Dataset};
use crate::error::{Error, Result};
use crate::gcn::{
    backward, forward, forward_propagated, l1_loss, AdamConfig, AdamState, GcnModel, Mode,
};
use crate::graph::{propagation_operator, PropagationOperator, SpatialGraph};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2_weight: f64,
    pub dropout_p: f64,
    pub hidden_units: usize,
    pub train_fraction: f64,
    /// Radius of the buffer graph built when no graph is supplied (m).
    pub buffer_radius: f64,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        Self {
            epochs: 2000,
            learning_rate: adam.learning_rate,
            l2_weight: 5e-5,
            dropout_p: 0.2,
            hidden_units: 32,
            train_fraction: 0.05,
            buffer_radius: 600.0,
            seed: 7,
            beta1: adam.beta1,
            beta2: adam.beta2,
            epsilon: adam.epsilon,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!(
                "train_fraction must lie in (0, 1), found {}",
                self.train_fraction
            ));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return bad(format!(
                "dropout_p must lie in [0, 1), found {}",
                self.dropout_p
            ));
        }
        if self.hidden_units == 0 {
            return bad("hidden_units must be at least 1".into());
        }
        if !(self.learning_rate >= 0.0) || !(self.l2_weight >= 0.0) {
            return bad("learning_rate and l2_weight must be nonnegative".into());
        }
        if !(self.buffer_radius > 0.0) {
            return bad(format!(
                "buffer_radius must be positive, found {}",
                self.buffer_radius
            ));
        }
        if !(0.0..1.0).contains(&self.beta1)
            || !(0.0..1.0).contains(&self.beta2)
            || !(self.epsilon > 0.0)
        {
            return bad("Adam betas must lie in [0, 1) and epsilon must be positive".into());
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }
}

/// Disjoint, exhaustive, sorted node index sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Random split with `|train| = round(fraction · n)`.
pub fn split<R: Rng + ?Sized>(n: usize, fraction: f64, rng: &mut R) -> Result<Split> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "train fraction must lie in (0, 1), found {fraction}"
        )));
    }
    let k = (fraction * n as f64).round() as usize;
    if k == 0 {
        return Err(Error::EmptyIndexSet("training split (fraction too small)"));
    }
    if k >= n {
        return Err(Error::EmptyIndexSet(
            "validation split (fraction too large)",
        ));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let mut train = idx[..k].to_vec();
    let mut validation = idx[k..].to_vec();
    train.sort_unstable();
    validation.sort_unstable();
    Ok(Split { train, validation })
}

/// Per-epoch trajectories of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainHistory {
    pub seed: u64,
    /// Mean L1 over the training nodes (log scale), dropout active.
    pub loss: Vec<f64>,
    /// Count-scale mean absolute error over validation nodes after the
    /// epoch's update, evaluated without dropout.
    pub abs_error: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: GcnModel,
    pub history: TrainHistory,
    pub split: Split,
}

// Independent generator streams derived from one seed.
const STREAM_SPLIT: u64 = 1;
const STREAM_INIT: u64 = 2;
const STREAM_DROPOUT: u64 = 3;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(id);
    r
}

/// Full-batch semi-supervised training.
///
/// The loss and its gradient only ever see the training targets: every other
/// entry of the target vector handed to them is NaN, so an accidental read
/// would poison the loss and abort the run.
pub fn train(
    dataset: &Dataset,
    graph: &SpatialGraph,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    let n = dataset.len();
    if graph.n() != n {
        return Err(Error::DimensionMismatch {
            context: "graph nodes vs dataset rows",
            expected: n,
            found: graph.n(),
        });
    }
    let (targets_log, counts) = dataset.require_targets()?;
    let prop = propagation_operator(graph);
    let split = split(
        n,
        config.train_fraction,
        &mut stream(config.seed, STREAM_SPLIT),
    )?;

    let mut train_targets = vec![f64::NAN; n];
    for &i in &split.train {
        train_targets[i] = targets_log[i];
    }
    let val_counts: Vec<f64> = split.validation.iter().map(|&i| counts[i]).collect();

    let mut model = GcnModel::glorot(
        dataset.channels(),
        config.hidden_units,
        &mut stream(config.seed, STREAM_INIT),
    );
    let mut adam = AdamState::new(&model, config.adam());
    let mut dropout_rng = stream(config.seed, STREAM_DROPOUT);
    let eval_input = prop.apply_dense(&dataset.features)?;

    let mut history = TrainHistory {
        seed: config.seed,
        loss: Vec::with_capacity(config.epochs),
        abs_error: Vec::with_capacity(config.epochs),
    };
    for epoch in 1..=config.epochs {
        let cache = forward(
            &model,
            &dataset.features,
            &prop,
            config.dropout_p,
            Mode::Train,
            &mut dropout_rng,
        )?;
        let loss = l1_loss(&cache.output, &train_targets, &split.train)?;
        if !loss.is_finite() {
            return Err(Error::Divergence { epoch, loss });
        }
        let grads = backward(
            &model,
            &cache,
            &train_targets,
            &split.train,
            &prop,
            config.l2_weight,
        )?;
        adam.step(&mut model, &grads)?;
        if !model.theta0.is_finite() || !model.theta1.is_finite() {
            return Err(Error::Divergence {
                epoch,
                loss: f64::NAN,
            });
        }

        let z = predict_propagated(&model, &eval_input, &prop)?;
        let err = mean_abs_error(&split.validation, &z, &val_counts);
        if !err.is_finite() {
            return Err(Error::Divergence { epoch, loss: err });
        }
        history.loss.push(loss);
        history.abs_error.push(err);
        if epoch % 500 == 0 {
            log::debug!(
                "seed {} epoch {epoch}: loss {loss:.5}, abs error {err:.3}",
                config.seed
            );
        }
    }
    Ok(TrainOutcome {
        model,
        history,
        split,
    })
}

fn mean_abs_error(idx: &[usize], log_outputs: &[f64], truth: &[f64]) -> f64 {
    let sum: f64 = idx
        .iter()
        .zip(truth)
        .map(|(&i, t)| (log_outputs[i].exp_m1().max(0.0) - t).abs())
        .sum();
    sum / idx.len() as f64
}

fn predict_propagated(
    model: &GcnModel,
    propagated_input: &crate::linalg::DenseMatrix,
    prop: &PropagationOperator,
) -> Result<Vec<f64>> {
    // forward_propagated only reads `input` for the cache; skip the copy
    let empty = crate::linalg::DenseMatrix::zeros(0, 0);
    Ok(forward_propagated(model, empty, propagated_input.clone(), None, prop)?.output)
}

/// Eval-mode log-scale outputs for every node.
pub fn predict(model: &GcnModel, dataset: &Dataset, graph: &SpatialGraph) -> Result<Vec<f64>> {
    let prop = propagation_operator(graph);
    if model.input_channels() != dataset.channels() {
        return Err(Error::DimensionMismatch {
            context: "model input channels vs dataset types",
            expected: model.input_channels(),
            found: dataset.channels(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    Ok(forward(model, &dataset.features, &prop, 0.0, Mode::Eval, &mut rng)?.output)
}

/// Prediction quality over a node subset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub count: usize,
    /// Mean absolute error on the count scale.
    pub mae: f64,
    /// Mean absolute error on the `ln(1 + c)` scale.
    pub l1_log: f64,
    /// `mae / mean(true counts)`.
    pub ratio: f64,
}

/// Metrics from paired predicted / actual counts.
pub fn metrics_from_counts(predicted: &[f64], actual: &[f64]) -> Result<Metrics> {
    if predicted.len() != actual.len() {
        return Err(Error::DimensionMismatch {
            context: "predicted vs actual counts",
            expected: actual.len(),
            found: predicted.len(),
        });
    }
    if predicted.is_empty() {
        return Err(Error::EmptyIndexSet("evaluation indices"));
    }
    let n = predicted.len() as f64;
    let mae = predicted
        .iter()
        .zip(actual)
        .map(|(p, a)| (p - a).abs())
        .sum::<f64>()
        / n;
    let l1_log = predicted
        .iter()
        .zip(actual)
        .map(|(p, a)| (p.ln_1p() - a.ln_1p()).abs())
        .sum::<f64>()
        / n;
    let mean_truth = actual.iter().sum::<f64>() / n;
    Ok(Metrics {
        count: predicted.len(),
        mae,
        l1_log,
        ratio: mae / mean_truth,
    })
}

pub fn evaluate(
    model: &GcnModel,
    dataset: &Dataset,
    graph: &SpatialGraph,
    idx: &[usize],
) -> Result<Metrics> {
    if idx.is_empty() {
        return Err(Error::EmptyIndexSet("evaluation indices"));
    }
    let (_, counts) = dataset.require_targets()?;
    let z = predict(model, dataset, graph)?;
    let pred = predicted_counts(&z);
    let p: Vec<f64> = idx.iter().map(|&i| pred[i]).collect();
    let a: Vec<f64> = idx.iter().map(|&i| counts[i]).collect();
    metrics_from_counts(&p, &a)
}
