use super::{GcnModel, Gradients};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 3e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Bias-corrected Adam moments for both parameter matrices.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub config: AdamConfig,
    pub m0: DenseMatrix,
    pub v0: DenseMatrix,
    pub m1: DenseMatrix,
    pub v1: DenseMatrix,
    pub t: u64,
}

impl AdamState {
    pub fn new(model: &GcnModel, config: AdamConfig) -> Self {
        let (r0, c0) = model.theta0.shape();
        let (r1, c1) = model.theta1.shape();
        Self {
            config,
            m0: DenseMatrix::zeros(r0, c0),
            v0: DenseMatrix::zeros(r0, c0),
            m1: DenseMatrix::zeros(r1, c1),
            v1: DenseMatrix::zeros(r1, c1),
            t: 0,
        }
    }

    /// One update of `model` in place.
    pub fn step(&mut self, model: &mut GcnModel, grads: &Gradients) -> Result<()> {
        for (param, grad, m) in [
            (&model.theta0, &grads.theta0, &self.m0),
            (&model.theta1, &grads.theta1, &self.m1),
        ] {
            if param.shape() != grad.shape() || param.shape() != m.shape() {
                return Err(Error::DimensionMismatch {
                    context: "Adam parameter shape",
                    expected: param.as_slice().len(),
                    found: grad.as_slice().len(),
                });
            }
        }
        self.t += 1;
        let cfg = self.config;
        let c1 = 1.0 - cfg.beta1.powi(self.t as i32);
        let c2 = 1.0 - cfg.beta2.powi(self.t as i32);
        update(
            &cfg,
            c1,
            c2,
            &mut model.theta0,
            &grads.theta0,
            &mut self.m0,
            &mut self.v0,
        );
        update(
            &cfg,
            c1,
            c2,
            &mut model.theta1,
            &grads.theta1,
            &mut self.m1,
            &mut self.v1,
        );
        Ok(())
    }
}

fn update(
    cfg: &AdamConfig,
    c1: f64,
    c2: f64,
    param: &mut DenseMatrix,
    grad: &DenseMatrix,
    m: &mut DenseMatrix,
    v: &mut DenseMatrix,
) {
    let params = param.as_mut_slice();
    let (ms, vs) = (m.as_mut_slice(), v.as_mut_slice());
    for (k, &g) in grad.as_slice().iter().enumerate() {
        ms[k] = cfg.beta1 * ms[k] + (1.0 - cfg.beta1) * g;
        vs[k] = cfg.beta2 * vs[k] + (1.0 - cfg.beta2) * g * g;
        let m_hat = ms[k] / c1;
        let v_hat = vs[k] / c2;
        params[k] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
}
