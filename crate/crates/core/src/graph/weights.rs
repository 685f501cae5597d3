//! Distance matrices and distance-decay edge weights.

use super::points::{euclidean, PointSet};
use super::SpatialGraph;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::linalg::CsrMatrix;

/// Anything that can produce rows of a symmetric pairwise distance matrix.
///
/// [`DistanceMatrix`] stores all `n²` entries; [`PointSet`] recomputes each
/// row from coordinates, which is what large inputs should use.
pub trait DistanceSource: Sync {
    fn n(&self) -> usize;

    /// Write row `i` of the distance matrix into `out` (length `n`).
    fn fill_row(&self, i: usize, out: &mut [f64]);

    fn distance(&self, i: usize, j: usize) -> f64;
}

impl DistanceSource for PointSet {
    fn n(&self) -> usize {
        self.len()
    }

    fn fill_row(&self, i: usize, out: &mut [f64]) {
        let c = self.coords();
        let p = c[i];
        for (o, &q) in out.iter_mut().zip(c) {
            *o = euclidean(p, q);
        }
    }

    fn distance(&self, i: usize, j: usize) -> f64 {
        PointSet::distance(self, i, j)
    }
}

/// Dense symmetric matrix of pairwise distances in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    /// Wrap a caller-supplied row-major `n×n` matrix.
    pub fn from_vec(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                context: "distance matrix storage",
                expected: n * n,
                found: data.len(),
            });
        }
        if let Some(v) = data.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::Data(format!("invalid distance {v}")));
        }
        Ok(Self { n, data })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

impl DistanceSource for DistanceMatrix {
    fn n(&self) -> usize {
        self.n
    }

    fn fill_row(&self, i: usize, out: &mut [f64]) {
        out.copy_from_slice(self.row(i));
    }

    fn distance(&self, i: usize, j: usize) -> f64 {
        self.get(i, j)
    }
}

pub fn distance_matrix(points: &PointSet) -> DistanceMatrix {
    distance_matrix_with(points, Execution::default())
}

pub fn distance_matrix_with(points: &PointSet, exec: Execution) -> DistanceMatrix {
    let n = points.len();
    let mut data = vec![0.0; n * n];
    exec.for_each_chunk(&mut data, n, |i, row| points.fill_row(i, row));
    DistanceMatrix { n, data }
}

/// Distance from each node to its `k`-th nearest other node.
pub fn knn_sigma<D: DistanceSource + ?Sized>(dist: &D, k: usize) -> Result<Vec<f64>> {
    knn_sigma_with(dist, k, Execution::default())
}

pub fn knn_sigma_with<D: DistanceSource + ?Sized>(
    dist: &D,
    k: usize,
    exec: Execution,
) -> Result<Vec<f64>> {
    let n = dist.n();
    if k == 0 || k >= n {
        return Err(Error::InvalidParameter(format!(
            "neighbor rank k = {k} must satisfy 1 <= k < n = {n}"
        )));
    }
    let sigma = exec.map_range(n, |i| {
        let mut row = vec![0.0; n];
        dist.fill_row(i, &mut row);
        row.swap_remove(i);
        let (_, kth, _) = row.select_nth_unstable_by(k - 1, f64::total_cmp);
        *kth
    });
    if let Some(node) = sigma.iter().position(|&s| s <= 0.0) {
        return Err(Error::DegenerateScale { node, k });
    }
    Ok(sigma)
}

/// Self-tuning kernel `w_ij = exp(-d(i,j) / (σ_i σ_j))` for `i ≠ j`.
///
/// The exponent is the plain distance, not its square. The diagonal is not
/// stored; self-loops are added once by the propagation operator.
pub fn gaussian_kernel_weights<D: DistanceSource + ?Sized>(
    dist: &D,
    sigma: &[f64],
) -> Result<SpatialGraph> {
    gaussian_kernel_weights_with(dist, sigma, Execution::default())
}

pub fn gaussian_kernel_weights_with<D: DistanceSource + ?Sized>(
    dist: &D,
    sigma: &[f64],
    exec: Execution,
) -> Result<SpatialGraph> {
    if sigma.len() != dist.n() {
        return Err(Error::DimensionMismatch {
            context: "kernel scale vector",
            expected: dist.n(),
            found: sigma.len(),
        });
    }
    if let Some(s) = sigma.iter().find(|s| !(**s > 0.0) || !s.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "kernel scales must be positive and finite, found {s}"
        )));
    }
    Ok(build_symmetric(dist, exec, |i, j, d| {
        Some((-d / (sigma[i] * sigma[j])).exp())
    }))
}

/// Distance-decay weighting functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayScheme {
    /// `1` if `d ≤ radius`, no edge otherwise.
    Binary { radius: f64 },
    /// `d^(-exponent)`
    Power { exponent: f64 },
    /// `exp(-rate · d)`
    Exponential { rate: f64 },
    /// Self-tuning kernel with σ from the `k`-th nearest neighbor.
    Gaussian { k: usize },
}

impl DecayScheme {
    fn validate(&self) -> Result<()> {
        let (name, v) = match *self {
            DecayScheme::Binary { radius } => ("radius", radius),
            DecayScheme::Power { exponent } => ("exponent", exponent),
            DecayScheme::Exponential { rate } => ("rate", rate),
            DecayScheme::Gaussian { k } => ("k", k as f64),
        };
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "{name} must be positive, found {v}"
            )))
        }
    }
}

pub fn decay_weights<D: DistanceSource + ?Sized>(
    dist: &D,
    scheme: DecayScheme,
) -> Result<SpatialGraph> {
    decay_weights_with(dist, scheme, Execution::default())
}

pub fn decay_weights_with<D: DistanceSource + ?Sized>(
    dist: &D,
    scheme: DecayScheme,
    exec: Execution,
) -> Result<SpatialGraph> {
    scheme.validate()?;
    match scheme {
        DecayScheme::Binary { radius } => Ok(build_symmetric(dist, exec, |_, _, d| {
            (d <= radius).then_some(1.0)
        })),
        DecayScheme::Power { exponent } => {
            let n = dist.n();
            if let Some((i, j)) = exec
                .map_range(n, |i| {
                    (i + 1..n)
                        .find(|&j| dist.distance(i, j) == 0.0)
                        .map(|j| (i, j))
                })
                .into_iter()
                .flatten()
                .next()
            {
                return Err(Error::DegenerateDistance { i, j });
            }
            Ok(build_symmetric(dist, exec, |_, _, d| {
                Some(d.powf(-exponent))
            }))
        }
        DecayScheme::Exponential { rate } => Ok(build_symmetric(dist, exec, |_, _, d| {
            Some((-rate * d).exp())
        })),
        DecayScheme::Gaussian { k } => {
            let sigma = knn_sigma_with(dist, k, exec)?;
            gaussian_kernel_weights_with(dist, &sigma, exec)
        }
    }
}

/// Unweighted buffer graph: an edge joins two points whose distance is at
/// most `radius` (inclusive).
pub fn buffer_adjacency(points: &PointSet, radius: f64) -> Result<SpatialGraph> {
    decay_weights(points, DecayScheme::Binary { radius })
}

pub fn buffer_adjacency_with(
    points: &PointSet,
    radius: f64,
    exec: Execution,
) -> Result<SpatialGraph> {
    decay_weights_with(points, DecayScheme::Binary { radius }, exec)
}

/// Evaluate `weight(i, j, d(i,j))` on the strict upper triangle and mirror it,
/// so the result is symmetric regardless of the source. Non-positive or
/// non-finite weights are not stored.
fn build_symmetric<D, F>(dist: &D, exec: Execution, weight: F) -> SpatialGraph
where
    D: DistanceSource + ?Sized,
    F: Fn(usize, usize, f64) -> Option<f64> + Sync + Send,
{
    let n = dist.n();
    let upper: Vec<Vec<(usize, f64)>> = exec.map_range(n, |i| {
        let mut row = vec![0.0; n];
        dist.fill_row(i, &mut row);
        (i + 1..n)
            .filter_map(|j| {
                weight(i, j, row[j])
                    .filter(|w| *w > 0.0 && w.is_finite())
                    .map(|w| (j, w))
            })
            .collect()
    });
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, r) in upper.iter().enumerate() {
        for &(j, w) in r {
            rows[j].push((i, w));
        }
    }
    for (i, r) in upper.into_iter().enumerate() {
        rows[i].extend(r);
    }
    let weights = CsrMatrix::from_rows(n, rows).expect("indices bounded by n");
    SpatialGraph::from_csr_unchecked(weights)
}
