//! Two-layer graph convolutional regressor
//! `Z = Ŵ · ReLU(Ŵ X Θ⁽⁰⁾) · Θ⁽¹⁾` with a linear output.
//!
//! Training objective: mean absolute error over the training index set plus
//! `λ/2 · (‖Θ⁽⁰⁾‖² + ‖Θ⁽¹⁾‖²)`. Gradients are derived by hand; see
//! [`backward`]. Dropout is inverted dropout on the input features and on the
//! hidden activation, active only in [`Mode::Train`].

mod adam;
mod gradcheck;

pub use adam::{AdamConfig, AdamState};
pub use gradcheck::{gradient_check, gradient_check_with, GradCheckInstance, GradCheckReport};

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::PropagationOperator;
use crate::linalg::DenseMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct GcnModel {
    /// `C × H` input-to-hidden weights.
    pub theta0: DenseMatrix,
    /// `H × 1` hidden-to-output weights.
    pub theta1: DenseMatrix,
}

impl GcnModel {
    pub fn new(theta0: DenseMatrix, theta1: DenseMatrix) -> Result<Self> {
        if theta1.cols() != 1 {
            return Err(Error::DimensionMismatch {
                context: "output layer width",
                expected: 1,
                found: theta1.cols(),
            });
        }
        if theta0.cols() != theta1.rows() {
            return Err(Error::DimensionMismatch {
                context: "hidden width",
                expected: theta0.cols(),
                found: theta1.rows(),
            });
        }
        if !theta0.is_finite() || !theta1.is_finite() {
            return Err(Error::Data("model parameters must be finite".into()));
        }
        Ok(Self { theta0, theta1 })
    }

    /// Glorot-uniform initialization of both layers.
    pub fn glorot<R: Rng + ?Sized>(input_channels: usize, hidden: usize, rng: &mut R) -> Self {
        let theta0 = glorot_init(input_channels, hidden, rng);
        let theta1 = glorot_init(hidden, 1, rng);
        Self { theta0, theta1 }
    }

    pub fn input_channels(&self) -> usize {
        self.theta0.rows()
    }

    pub fn hidden_units(&self) -> usize {
        self.theta0.cols()
    }

    /// `(C, H, 1)`
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.input_channels(), self.hidden_units(), 1)
    }

    /// FNV-1a over the bit patterns of every parameter.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let (c, hid, _) = self.dims();
        for word in [c as u64, hid as u64]
            .into_iter()
            .chain(self.theta0.as_slice().iter().map(|v| v.to_bits()))
            .chain(self.theta1.as_slice().iter().map(|v| v.to_bits()))
        {
            for b in word.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }
}

/// Uniform samples in `[-s, s]` with `s = sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_init<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> DenseMatrix {
    assert!(fan_in > 0 && fan_out > 0, "fans must be positive");
    let s = (6.0 / (fan_in + fan_out) as f64).sqrt();
    DenseMatrix::from_fn(fan_in, fan_out, |_, _| rng.random_range(-s..=s))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Intermediates of one forward pass, consumed by [`backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input after dropout, `n × C`.
    pub input: DenseMatrix,
    /// `Ŵ X` on the dropped-out input, `n × C`.
    pub propagated_input: DenseMatrix,
    /// `Ŵ X Θ⁽⁰⁾`, `n × H`.
    pub pre_activation: DenseMatrix,
    /// `ReLU(pre_activation)`.
    pub hidden: DenseMatrix,
    /// Per-entry hidden dropout scale (0 or `1/(1-p)`); `None` without dropout.
    pub hidden_mask: Option<Vec<f64>>,
    /// Hidden activation after dropout.
    pub hidden_dropped: DenseMatrix,
    /// Model output `Z`, one value per node.
    pub output: Vec<f64>,
    fingerprint: u64,
}

impl ForwardCache {
    pub fn n(&self) -> usize {
        self.output.len()
    }
}

fn dropout_mask<R: Rng + ?Sized>(len: usize, p: f64, rng: &mut R) -> Vec<f64> {
    let keep = 1.0 / (1.0 - p);
    (0..len)
        .map(|_| if rng.random::<f64>() < p { 0.0 } else { keep })
        .collect()
}

fn apply_mask(m: &DenseMatrix, mask: &[f64]) -> DenseMatrix {
    let data = m.as_slice().iter().zip(mask).map(|(v, s)| v * s).collect();
    DenseMatrix::from_vec(m.rows(), m.cols(), data).expect("mask length matches")
}

pub fn forward<R: Rng + ?Sized>(
    model: &GcnModel,
    x: &DenseMatrix,
    prop: &PropagationOperator,
    dropout_p: f64,
    mode: Mode,
    rng: &mut R,
) -> Result<ForwardCache> {
    if !(0.0..1.0).contains(&dropout_p) {
        return Err(Error::InvalidParameter(format!(
            "dropout probability must lie in [0, 1), found {dropout_p}"
        )));
    }
    if x.rows() != prop.n() {
        return Err(Error::DimensionMismatch {
            context: "feature rows vs graph nodes",
            expected: prop.n(),
            found: x.rows(),
        });
    }
    if x.cols() != model.input_channels() {
        return Err(Error::DimensionMismatch {
            context: "feature channels vs model input",
            expected: model.input_channels(),
            found: x.cols(),
        });
    }
    let dropping = mode == Mode::Train && dropout_p > 0.0;
    let input = if dropping {
        apply_mask(x, &dropout_mask(x.as_slice().len(), dropout_p, rng))
    } else {
        x.clone()
    };
    let propagated_input = prop.apply_dense(&input)?;
    let hidden_mask = if dropping {
        Some(dropout_mask(
            x.rows() * model.hidden_units(),
            dropout_p,
            rng,
        ))
    } else {
        None
    };
    forward_propagated(model, input, propagated_input, hidden_mask, prop)
}

/// Forward pass from an already propagated input `Ŵ X`.
///
/// Evaluation reuses one `Ŵ X` for every epoch since the features do not
/// change.
pub fn forward_propagated(
    model: &GcnModel,
    input: DenseMatrix,
    propagated_input: DenseMatrix,
    hidden_mask: Option<Vec<f64>>,
    prop: &PropagationOperator,
) -> Result<ForwardCache> {
    let pre_activation = propagated_input.matmul(&model.theta0)?;
    let hidden = pre_activation.map(|v| v.max(0.0));
    let hidden_dropped = match &hidden_mask {
        Some(m) => apply_mask(&hidden, m),
        None => hidden.clone(),
    };
    let projected = hidden_dropped.matmul(&model.theta1)?;
    let output = prop.apply(projected.as_slice())?;
    Ok(ForwardCache {
        input,
        propagated_input,
        pre_activation,
        hidden,
        hidden_mask,
        hidden_dropped,
        output,
        fingerprint: model.checksum(),
    })
}

fn check_indices(n: usize, idx: &[usize]) -> Result<()> {
    if idx.is_empty() {
        return Err(Error::EmptyIndexSet("training indices"));
    }
    if let Some(&i) = idx.iter().find(|&&i| i >= n) {
        return Err(Error::DimensionMismatch {
            context: "node index",
            expected: n,
            found: i,
        });
    }
    Ok(())
}

/// Mean absolute deviation over `train_idx` (log-scale targets).
pub fn l1_loss(output: &[f64], targets: &[f64], train_idx: &[usize]) -> Result<f64> {
    if output.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            context: "targets vs outputs",
            expected: output.len(),
            found: targets.len(),
        });
    }
    check_indices(output.len(), train_idx)?;
    let sum: f64 = train_idx
        .iter()
        .map(|&i| (output[i] - targets[i]).abs())
        .sum();
    Ok(sum / train_idx.len() as f64)
}

/// `weight · ½ · Σ θ²` over both layers.
pub fn l2_penalty(model: &GcnModel, weight: f64) -> f64 {
    weight * 0.5 * (model.theta0.frobenius_sq() + model.theta1.frobenius_sq())
}

/// Gradients with respect to `Θ⁽⁰⁾` and `Θ⁽¹⁾`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub theta0: DenseMatrix,
    pub theta1: DenseMatrix,
}

#[inline]
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Analytic gradient of `l1_loss + l2_penalty` through the forward pass that
/// produced `cache`.
///
/// With `D = ∂L/∂Z` (`sign(Z−y)/|𝕋|` on 𝕋, zero elsewhere):
///
/// ```text
/// ∂L/∂(A_d Θ⁽¹⁾) = Ŵ D                   (Ŵ symmetric)
/// ∂L/∂Θ⁽¹⁾      = A_dᵀ Ŵ D + λ Θ⁽¹⁾
/// ∂L/∂S         = (Ŵ D Θ⁽¹⁾ᵀ) ∘ mask ∘ [S > 0]
/// ∂L/∂Θ⁽⁰⁾      = (Ŵ X_d)ᵀ ∂L/∂S + λ Θ⁽⁰⁾
/// ```
///
/// Subgradients of `|·|` and ReLU at 0 are taken as 0.
pub fn backward(
    model: &GcnModel,
    cache: &ForwardCache,
    targets: &[f64],
    train_idx: &[usize],
    prop: &PropagationOperator,
    l2_weight: f64,
) -> Result<Gradients> {
    let n = cache.n();
    let h = model.hidden_units();
    if cache.fingerprint != model.checksum() {
        return Err(Error::StaleCache(
            "model parameters changed since the forward pass".into(),
        ));
    }
    if n != prop.n() || cache.pre_activation.shape() != (n, h) {
        return Err(Error::StaleCache(format!(
            "cache shape {:?} does not match n = {}, H = {h}",
            cache.pre_activation.shape(),
            prop.n()
        )));
    }
    if targets.len() != n {
        return Err(Error::DimensionMismatch {
            context: "targets vs outputs",
            expected: n,
            found: targets.len(),
        });
    }
    check_indices(n, train_idx)?;

    let inv_t = 1.0 / train_idx.len() as f64;
    let mut d_out = vec![0.0; n];
    for &i in train_idx {
        d_out[i] += sign(cache.output[i] - targets[i]) * inv_t;
    }
    let d_proj = prop.apply(&d_out)?;

    let mut g1 = cache
        .hidden_dropped
        .t_matmul(&DenseMatrix::column(&d_proj))?;
    for (g, t) in g1.as_mut_slice().iter_mut().zip(model.theta1.as_slice()) {
        *g += l2_weight * t;
    }

    let theta1 = model.theta1.as_slice();
    let mut d_pre = DenseMatrix::zeros(n, h);
    for i in 0..n {
        let dp = d_proj[i];
        if dp == 0.0 {
            continue;
        }
        let s = cache.pre_activation.row(i);
        let row = d_pre.row_mut(i);
        for k in 0..h {
            if s[k] > 0.0 {
                let scale = cache.hidden_mask.as_ref().map_or(1.0, |m| m[i * h + k]);
                row[k] = dp * theta1[k] * scale;
            }
        }
    }
    let mut g0 = cache.propagated_input.t_matmul(&d_pre)?;
    for (g, t) in g0.as_mut_slice().iter_mut().zip(model.theta0.as_slice()) {
        *g += l2_weight * t;
    }
    Ok(Gradients {
        theta0: g0,
        theta1: g1,
    })
}

/// Training objective at the current parameters in eval mode.
pub fn objective(
    model: &GcnModel,
    x: &DenseMatrix,
    prop: &PropagationOperator,
    targets: &[f64],
    train_idx: &[usize],
    l2_weight: f64,
) -> Result<f64> {
    // eval mode draws nothing from the generator
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0);
    let cache = forward(model, x, prop, 0.0, Mode::Eval, &mut rng)?;
    Ok(l1_loss(&cache.output, targets, train_idx)? + l2_penalty(model, l2_weight))
}
