//! Spatial graphs built from point geometry and the Laplacian-family
//! operators derived from them.

mod points;
mod weights;

pub use points::{euclidean, PointSet};
pub use weights::{
    buffer_adjacency, buffer_adjacency_with, decay_weights, decay_weights_with, distance_matrix,
    distance_matrix_with, gaussian_kernel_weights, gaussian_kernel_weights_with, knn_sigma,
    knn_sigma_with, DecayScheme, DistanceMatrix, DistanceSource,
};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::linalg::{CsrMatrix, DenseMatrix};

/// Symmetric, nonnegative weighted adjacency without self-loops.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGraph {
    weights: CsrMatrix,
}

impl SpatialGraph {
    /// Validate and wrap an adjacency matrix. Rejects asymmetric matrices,
    /// non-positive or non-finite stored weights and stored diagonal entries.
    pub fn from_csr(weights: CsrMatrix) -> Result<Self> {
        if weights.rows() != weights.cols() {
            return Err(Error::DimensionMismatch {
                context: "adjacency must be square",
                expected: weights.rows(),
                found: weights.cols(),
            });
        }
        if let Some((i, j, w)) = weights
            .iter()
            .find(|&(i, j, w)| i == j || !(w > 0.0) || !w.is_finite())
        {
            return Err(Error::Data(format!(
                "invalid adjacency entry ({i}, {j}) = {w}"
            )));
        }
        if !weights.is_symmetric() {
            return Err(Error::Data("adjacency is not symmetric".into()));
        }
        Ok(Self { weights })
    }

    pub(crate) fn from_csr_unchecked(weights: CsrMatrix) -> Self {
        debug_assert!(weights.is_symmetric());
        Self { weights }
    }

    /// Graph from undirected `(i, j, w)` edges, each listed once.
    pub fn from_edges(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut triplets = Vec::new();
        for (i, j, w) in edges {
            if i >= n || j >= n {
                return Err(Error::Data(format!(
                    "edge ({i}, {j}) out of range for {n} nodes"
                )));
            }
            triplets.push((i, j, w));
            triplets.push((j, i, w));
        }
        Self::from_csr(CsrMatrix::from_triplets(n, n, triplets)?)
    }

    pub fn edgeless(n: usize) -> Self {
        Self {
            weights: CsrMatrix::empty(n, n),
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.weights.rows()
    }

    pub fn weights(&self) -> &CsrMatrix {
        &self.weights
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights.get(i, j)
    }

    /// Undirected edge count.
    pub fn edge_count(&self) -> usize {
        self.weights.nnz() / 2
    }

    pub fn isolated_count(&self) -> usize {
        (0..self.n())
            .filter(|&i| self.weights.row(i).0.is_empty())
            .count()
    }

    /// Undirected edges `(i, j, w)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.weights.iter().filter(|&(i, j, _)| i < j)
    }

    pub fn degrees(&self) -> Vec<f64> {
        self.weights.row_sums()
    }
}

/// `Δ^{-1/2}` with the zero-degree convention `0^{-1/2} := 0`.
fn inv_sqrt(degree: &[f64]) -> Vec<f64> {
    degree
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
        .collect()
}

/// Degree vector, combinatorial Laplacian `L = Δ − W` and normalized
/// Laplacian `Lˢ = I − Δ^{-1/2} W Δ^{-1/2}`.
///
/// An isolated node has `Δ^{-1/2}` entry 0, so its row of `Lˢ` is the
/// identity row.
#[derive(Debug, Clone)]
pub struct LaplacianBundle {
    pub degree: Vec<f64>,
    pub laplacian: CsrMatrix,
    pub normalized: CsrMatrix,
    inv_sqrt_degree: Vec<f64>,
    normalized_adjacency: CsrMatrix,
}

impl LaplacianBundle {
    pub fn n(&self) -> usize {
        self.degree.len()
    }

    /// `Δ^{-1/2} W Δ^{-1/2}`
    pub fn normalized_adjacency(&self) -> &CsrMatrix {
        &self.normalized_adjacency
    }

    pub fn inv_sqrt_degree(&self) -> &[f64] {
        &self.inv_sqrt_degree
    }
}

pub fn laplacian_bundle(graph: &SpatialGraph) -> LaplacianBundle {
    let w = graph.weights();
    let degree = graph.degrees();
    let laplacian = {
        let rows = (0..w.rows())
            .map(|i| {
                let (idx, val) = w.row(i);
                let mut r: Vec<(usize, f64)> =
                    idx.iter().zip(val).map(|(&j, &v)| (j, -v)).collect();
                r.push((i, degree[i]));
                r
            })
            .collect();
        CsrMatrix::from_rows(w.cols(), rows).expect("square adjacency")
    };
    let inv_sqrt_degree = inv_sqrt(&degree);
    let normalized_adjacency = w.normalize_symmetric(&degree);
    let normalized = normalized_adjacency.add_scaled_identity(-1.0, 1.0);
    LaplacianBundle {
        degree,
        laplacian,
        normalized,
        inv_sqrt_degree,
        normalized_adjacency,
    }
}

/// Renormalized propagation operator `Ŵ = Δ̃^{-1/2} (W + I) Δ̃^{-1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationOperator {
    matrix: CsrMatrix,
}

impl PropagationOperator {
    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn n(&self) -> usize {
        self.matrix.rows()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.matrix.matvec(x)
    }

    pub fn apply_with(&self, x: &[f64], exec: Execution) -> Result<Vec<f64>> {
        self.matrix.matvec_with(x, exec)
    }

    pub fn apply_dense(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        self.matrix.matmul_dense(x)
    }

    pub fn apply_dense_with(&self, x: &DenseMatrix, exec: Execution) -> Result<DenseMatrix> {
        self.matrix.matmul_dense_with(x, exec)
    }
}

pub fn propagation_operator(graph: &SpatialGraph) -> PropagationOperator {
    let w_tilde = graph.weights().add_scaled_identity(1.0, 1.0);
    let d = w_tilde.row_sums();
    PropagationOperator {
        matrix: w_tilde.normalize_symmetric(&d),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_edge() -> SpatialGraph {
        SpatialGraph::from_edges(2, [(0, 1, 1.0)]).unwrap()
    }

    pub(crate) fn triangle() -> SpatialGraph {
        SpatialGraph::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap()
    }

    #[test]
    fn from_csr_validation() {
        let asym = CsrMatrix::from_triplets(2, 2, [(0, 1, 1.0)]).unwrap();
        assert!(SpatialGraph::from_csr(asym).is_err());
        let diag = CsrMatrix::from_triplets(2, 2, [(0, 0, 1.0)]).unwrap();
        assert!(SpatialGraph::from_csr(diag).is_err());
        let neg = CsrMatrix::from_triplets(2, 2, [(0, 1, -1.0), (1, 0, -1.0)]).unwrap();
        assert!(SpatialGraph::from_csr(neg).is_err());
        assert!(SpatialGraph::from_edges(2, [(0, 2, 1.0)]).is_err());
    }

    #[test]
    fn two_node_laplacians() {
        let b = laplacian_bundle(&unit_edge());
        let want = [1.0, -1.0, -1.0, 1.0];
        assert_eq!(b.laplacian.to_dense().as_slice(), &want);
        assert_eq!(b.normalized.to_dense().as_slice(), &want);
    }

    #[test]
    fn edgeless_laplacians() {
        let b = laplacian_bundle(&SpatialGraph::edgeless(4));
        assert_eq!(b.laplacian.nnz(), 0);
        assert_eq!(b.normalized, CsrMatrix::identity(4));
    }

    #[test]
    fn laplacian_rows_sum_to_zero() {
        let g = SpatialGraph::from_edges(4, [(0, 1, 0.3), (1, 2, 2.5), (0, 3, 1e-3)]).unwrap();
        let b = laplacian_bundle(&g);
        for (i, s) in b.laplacian.row_sums().into_iter().enumerate() {
            assert!(s.abs() <= 1e-10 * b.degree[i].max(1.0));
        }
        assert!(b.normalized.is_symmetric());
    }

    #[test]
    fn propagation_examples() {
        let p = propagation_operator(&SpatialGraph::edgeless(1));
        assert_eq!(p.matrix().to_dense().as_slice(), &[1.0]);
        let p = propagation_operator(&unit_edge());
        assert_eq!(p.matrix().to_dense().as_slice(), &[0.5; 4]);
        let p = propagation_operator(&triangle());
        for v in p.matrix().to_dense().as_slice() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        let p = propagation_operator(&SpatialGraph::edgeless(3));
        assert_eq!(*p.matrix(), CsrMatrix::identity(3));
    }
}
