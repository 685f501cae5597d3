//! Spectral graph filters.
//!
//! Three routes to filtering a node signal `x`:
//!
//! * exact: `U diag(θ) Uᵀ x` on the eigenbasis of the normalized Laplacian
//!   (dense, reserved for small graphs and validation);
//! * Chebyshev: `Σ θ′ₖ Tₖ(L̃) x` with `L̃ = (2/λ_max) Lˢ − I`, evaluated with
//!   the three-term vector recurrence so cost is `O(K |E|)`;
//! * first order: `θ Ŵ x` with the renormalized propagation operator.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{laplacian_bundle, propagation_operator, LaplacianBundle, SpatialGraph};
use crate::linalg::{dot, norm2, CsrMatrix, DenseMatrix};

/// Largest graph accepted by [`eigendecompose`].
pub const DENSE_EIGEN_LIMIT: usize = 2000;

/// Orthonormal eigenvectors (as columns) and ascending eigenvalues of `Lˢ`.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    pub eigenvectors: DenseMatrix,
    pub eigenvalues: Vec<f64>,
}

impl SpectralBasis {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvector(&self, k: usize) -> Vec<f64> {
        (0..self.n()).map(|i| self.eigenvectors.get(i, k)).collect()
    }
}

pub fn eigendecompose(bundle: &LaplacianBundle) -> Result<SpectralBasis> {
    eigendecompose_with_limit(bundle, DENSE_EIGEN_LIMIT)
}

pub fn eigendecompose_with_limit(bundle: &LaplacianBundle, limit: usize) -> Result<SpectralBasis> {
    let n = bundle.n();
    if n > limit {
        return Err(Error::SizeLimit { n, limit });
    }
    let dense = bundle.normalized.to_dense();
    let m = DMatrix::from_row_slice(n, n, dense.as_slice());
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors = DenseMatrix::from_fn(n, n, |i, c| eig.eigenvectors[(i, order[c])]);
    Ok(SpectralBasis {
        eigenvectors,
        eigenvalues,
    })
}

fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        });
    }
    Ok(())
}

/// `x̂ = Uᵀ x`
pub fn graph_fourier(basis: &SpectralBasis, x: &[f64]) -> Result<Vec<f64>> {
    check_len("graph Fourier transform", basis.n(), x.len())?;
    Ok(basis
        .eigenvectors
        .t_matmul(&DenseMatrix::column(x))?
        .into_vec())
}

/// `x = U x̂`
pub fn inverse_graph_fourier(basis: &SpectralBasis, x_hat: &[f64]) -> Result<Vec<f64>> {
    check_len("inverse graph Fourier transform", basis.n(), x_hat.len())?;
    Ok(basis
        .eigenvectors
        .matmul(&DenseMatrix::column(x_hat))?
        .into_vec())
}

/// `U diag(θ) Uᵀ x` with one free parameter per eigenvalue.
pub fn spectral_filter(basis: &SpectralBasis, theta: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    check_len("spectral filter parameters", basis.n(), theta.len())?;
    let mut x_hat = graph_fourier(basis, x)?;
    for (v, t) in x_hat.iter_mut().zip(theta) {
        *v *= t;
    }
    inverse_graph_fourier(basis, &x_hat)
}

/// `p(M) x` for `p(t) = Σ coeffs[k] tᵏ`, by Horner's rule with sparse products.
pub fn apply_polynomial(m: &CsrMatrix, coeffs: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    check_len("polynomial argument", m.cols(), x.len())?;
    let mut acc = vec![0.0; x.len()];
    for &c in coeffs.iter().rev() {
        acc = m.matvec(&acc)?;
        for (a, xi) in acc.iter_mut().zip(x) {
            *a += c * xi;
        }
    }
    Ok(acc)
}

/// Chebyshev polynomial of the first kind `T_k(x)` by the three-term
/// recurrence.
pub fn chebyshev_t(k: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    if k == 0 {
        return prev;
    }
    for _ in 1..k {
        let next = 2.0 * x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Coefficients `θ′₀..θ′_K` of a Chebyshev expansion in the rescaled
/// spectrum `λ̃ = 2λ/λ_max − 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevCoefficients {
    coeffs: Vec<f64>,
    lambda_max: f64,
}

impl ChebyshevCoefficients {
    pub fn new(coeffs: Vec<f64>, lambda_max: f64) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidParameter(
                "Chebyshev expansion needs at least one coefficient".into(),
            ));
        }
        if !(lambda_max > 0.0) || !lambda_max.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "lambda_max must be positive, found {lambda_max}"
            )));
        }
        Ok(Self { coeffs, lambda_max })
    }

    /// Exact Chebyshev expansion of `p(λ) = Σ monomial[k] λᵏ` after rescaling.
    pub fn from_polynomial(monomial: &[f64], lambda_max: f64) -> Result<Self> {
        if monomial.is_empty() {
            return Self::new(vec![0.0], lambda_max);
        }
        // λ = a·t + a with a = λ_max/2; Horner in the Chebyshev basis:
        // t·T_0 = T_1, t·T_k = (T_{k+1} + T_{k-1}) / 2.
        let a = lambda_max / 2.0;
        let mut acc: Vec<f64> = vec![0.0];
        for &c in monomial.iter().rev() {
            let mut next = vec![0.0; acc.len() + 1];
            for (k, &v) in acc.iter().enumerate() {
                // multiply by (a t + a)
                next[k] += a * v;
                if k == 0 {
                    next[1] += a * v;
                } else {
                    next[k + 1] += 0.5 * a * v;
                    next[k - 1] += 0.5 * a * v;
                }
            }
            next[0] += c;
            acc = next;
        }
        acc.truncate(monomial.len());
        Self::new(acc, lambda_max)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    /// Scalar value of the expansion at eigenvalue `lambda`.
    pub fn eval(&self, lambda: f64) -> f64 {
        let t = 2.0 * lambda / self.lambda_max - 1.0;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * chebyshev_t(k, t))
            .sum()
    }
}

/// `Σ θ′ₖ Tₖ(L̃) x` with `L̃ = (2/λ_max) Lˢ − I`.
pub fn chebyshev_filter(
    bundle: &LaplacianBundle,
    cheb: &ChebyshevCoefficients,
    x: &[f64],
) -> Result<Vec<f64>> {
    check_len("Chebyshev filter signal", bundle.n(), x.len())?;
    let scale = 2.0 / cheb.lambda_max;
    let rescaled = |v: &[f64]| -> Result<Vec<f64>> {
        let mut out = bundle.normalized.matvec(v)?;
        for (o, vi) in out.iter_mut().zip(v) {
            *o = scale * *o - vi;
        }
        Ok(out)
    };
    let c = cheb.coeffs();
    let mut out: Vec<f64> = x.iter().map(|v| c[0] * v).collect();
    if c.len() == 1 {
        return Ok(out);
    }
    let mut prev = x.to_vec();
    let mut cur = rescaled(x)?;
    for (o, v) in out.iter_mut().zip(&cur) {
        *o += c[1] * v;
    }
    for &ck in &c[2..] {
        let mut next = rescaled(&cur)?;
        for (nx, p) in next.iter_mut().zip(&prev) {
            *nx = 2.0 * *nx - p;
        }
        for (o, v) in out.iter_mut().zip(&next) {
            *o += ck * v;
        }
        prev = std::mem::replace(&mut cur, next);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
pub struct PowerIteration {
    pub max_iterations: usize,
    /// Stop when successive Rayleigh quotients differ by less than this
    /// (relative).
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for PowerIteration {
    fn default() -> Self {
        Self {
            max_iterations: 20_000,
            tolerance: 1e-12,
            seed: 0,
        }
    }
}

/// Largest eigenvalue of `Lˢ` by power iteration with a Rayleigh quotient.
pub fn estimate_lambda_max(bundle: &LaplacianBundle, opts: PowerIteration) -> Result<f64> {
    let n = bundle.n();
    if n == 0 {
        return Err(Error::InvalidParameter("empty graph".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let mut norm = norm2(&v);
    if norm == 0.0 {
        v[0] = 1.0;
        norm = 1.0;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    let mut estimate = 0.0;
    for it in 0..opts.max_iterations {
        let w = bundle.normalized.matvec(&v)?;
        let rq = dot(&v, &w);
        let wn = norm2(&w);
        if wn == 0.0 {
            return Ok(0.0);
        }
        v = w.into_iter().map(|x| x / wn).collect();
        if it > 0 && (rq - estimate).abs() <= opts.tolerance * rq.abs().max(1e-300) {
            return Ok(rq);
        }
        estimate = rq;
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iterations,
        estimate,
    })
}

/// Which form of the single-parameter filter to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FirstOrderForm {
    /// `θ Ŵ x` with `Ŵ = Δ̃^{-1/2}(W + I)Δ̃^{-1/2}`.
    Renormalized,
    /// `θ (I + Δ^{-1/2} W Δ^{-1/2}) x`, the form before renormalization.
    Plain,
}

pub fn first_order_filter(
    graph: &SpatialGraph,
    theta: f64,
    x: &[f64],
    form: FirstOrderForm,
) -> Result<Vec<f64>> {
    check_len("first-order filter signal", graph.n(), x.len())?;
    let y = match form {
        FirstOrderForm::Renormalized => propagation_operator(graph).apply(x)?,
        FirstOrderForm::Plain => {
            let b = laplacian_bundle(graph);
            let mut y = b.normalized_adjacency().matvec(x)?;
            y.iter_mut().zip(x).for_each(|(a, b)| *a += b);
            y
        }
    };
    Ok(y.into_iter().map(|v| theta * v).collect())
}

/// Eigenvalues as a one-column CSV (`index,eigenvalue`).
pub fn eigenvalues_csv(basis: &SpectralBasis) -> String {
    let mut s = String::from("index,eigenvalue\n");
    for (i, l) in basis.eigenvalues.iter().enumerate() {
        s.push_str(&format!("{i},{l}\n"));
    }
    s
}
