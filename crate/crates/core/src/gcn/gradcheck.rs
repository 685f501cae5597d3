//! Central finite-difference check of [`backward`](super::backward).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{backward, forward, objective, GcnModel, Gradients, Mode};
use crate::error::Result;
use crate::graph::{propagation_operator, PropagationOperator, SpatialGraph};
use crate::linalg::DenseMatrix;

/// Step used for central differences.
pub const FD_STEP: f64 = 1e-5;

/// Minimum distance from every ReLU and absolute-value kink, so a step of
/// [`FD_STEP`] never crosses one.
const KINK_MARGIN: f64 = 1e-3;

/// Denominator floor of the relative error, for entries whose gradient is
/// (numerically) zero.
const REL_FLOOR: f64 = 1e-4;

/// A small full problem: model, features, graph operator, targets.
#[derive(Debug, Clone)]
pub struct GradCheckInstance {
    pub model: GcnModel,
    pub features: DenseMatrix,
    pub prop: PropagationOperator,
    pub targets: Vec<f64>,
    pub train_idx: Vec<usize>,
    pub l2_weight: f64,
}

impl GradCheckInstance {
    /// Random instance with `n` nodes, `c` channels and `h` hidden units,
    /// redrawn until every pre-activation and every training residual is at
    /// least `1e-3` away from zero.
    pub fn random(n: usize, c: usize, h: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        loop {
            let mut edges = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    if rng.random::<f64>() < 0.35 {
                        edges.push((i, j, rng.random_range(0.1..2.0)));
                    }
                }
            }
            let graph = SpatialGraph::from_edges(n, edges).expect("valid random edges");
            let prop = propagation_operator(&graph);
            let model = GcnModel::glorot(c, h, &mut rng);
            let features = DenseMatrix::from_fn(n, c, |_, _| rng.random_range(-1.0..1.0));
            let mut train_idx: Vec<usize> = (0..n).filter(|_| rng.random::<f64>() < 0.6).collect();
            if train_idx.is_empty() {
                train_idx.push(0);
            }
            let targets: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let inst = Self {
                model,
                features,
                prop,
                targets,
                train_idx,
                l2_weight: 0.05,
            };
            if inst.kink_distance() >= KINK_MARGIN {
                return inst;
            }
        }
    }

    /// The fixed instance used by the command-line `gradcheck` tool.
    pub fn shipped() -> Self {
        Self::random(10, 3, 4, 2024)
    }

    fn kink_distance(&self) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let c = forward(
            &self.model,
            &self.features,
            &self.prop,
            0.0,
            Mode::Eval,
            &mut rng,
        )
        .expect("consistent instance");
        let pre = c
            .pre_activation
            .as_slice()
            .iter()
            .map(|v| v.abs())
            .fold(f64::INFINITY, f64::min);
        let res = self
            .train_idx
            .iter()
            .map(|&i| (c.output[i] - self.targets[i]).abs())
            .fold(f64::INFINITY, f64::min);
        pre.min(res)
    }

    pub fn objective(&self, model: &GcnModel) -> Result<f64> {
        objective(
            model,
            &self.features,
            &self.prop,
            &self.targets,
            &self.train_idx,
            self.l2_weight,
        )
    }

    pub fn analytic_gradients(&self) -> Result<Gradients> {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cache = forward(
            &self.model,
            &self.features,
            &self.prop,
            0.0,
            Mode::Eval,
            &mut rng,
        )?;
        backward(
            &self.model,
            &cache,
            &self.targets,
            &self.train_idx,
            &self.prop,
            self.l2_weight,
        )
    }

    pub fn numeric_gradients(&self) -> Result<Gradients> {
        let mut out = Gradients {
            theta0: DenseMatrix::zeros(self.model.theta0.rows(), self.model.theta0.cols()),
            theta1: DenseMatrix::zeros(self.model.theta1.rows(), self.model.theta1.cols()),
        };
        for layer in 0..2 {
            let len = if layer == 0 {
                out.theta0.as_slice().len()
            } else {
                out.theta1.as_slice().len()
            };
            for k in 0..len {
                let mut plus = self.model.clone();
                let mut minus = self.model.clone();
                {
                    let (p, m) = if layer == 0 {
                        (&mut plus.theta0, &mut minus.theta0)
                    } else {
                        (&mut plus.theta1, &mut minus.theta1)
                    };
                    p.as_mut_slice()[k] += FD_STEP;
                    m.as_mut_slice()[k] -= FD_STEP;
                }
                let d = (self.objective(&plus)? - self.objective(&minus)?) / (2.0 * FD_STEP);
                let target = if layer == 0 {
                    &mut out.theta0
                } else {
                    &mut out.theta1
                };
                target.as_mut_slice()[k] = d;
            }
        }
        Ok(out)
    }
}

/// Worst disagreement between analytic and numeric gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    /// Max relative error over `Θ⁽⁰⁾` and `Θ⁽¹⁾` respectively.
    pub max_rel_error: [f64; 2],
    /// `(layer, row, col)` of the worst entry overall.
    pub worst_entry: (usize, usize, usize),
    pub tolerance: f64,
    pub passed: bool,
}

fn rel_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(REL_FLOOR)
}

pub fn gradient_check(instance: &GradCheckInstance, tolerance: f64) -> Result<GradCheckReport> {
    let analytic = instance.analytic_gradients()?;
    gradient_check_with(instance, &analytic, tolerance)
}

/// Check externally supplied gradients against central differences.
pub fn gradient_check_with(
    instance: &GradCheckInstance,
    analytic: &Gradients,
    tolerance: f64,
) -> Result<GradCheckReport> {
    let numeric = instance.numeric_gradients()?;
    let mut max_rel_error = [0.0f64; 2];
    let mut worst = (0, 0, 0);
    let mut worst_val = -1.0;
    for (layer, (a, n)) in [
        (&analytic.theta0, &numeric.theta0),
        (&analytic.theta1, &numeric.theta1),
    ]
    .into_iter()
    .enumerate()
    {
        for r in 0..a.rows() {
            for c in 0..a.cols() {
                let e = rel_error(a.get(r, c), n.get(r, c));
                max_rel_error[layer] = max_rel_error[layer].max(e);
                if e > worst_val {
                    worst_val = e;
                    worst = (layer, r, c);
                }
            }
        }
    }
    Ok(GradCheckReport {
        max_rel_error,
        worst_entry: worst,
        tolerance,
        passed: max_rel_error.iter().all(|&e| e < tolerance),
    })
}
