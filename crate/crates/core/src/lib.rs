//! Spatial graph convolution toolkit.
//!
//! Point data (planar coordinates, a categorical type and an observed
//! intensity per location) is embedded into a weighted spatial graph. On top
//! of that graph the crate provides:
//!
//! | Module | Purpose |
//! |--------|---------|
//! | [`graph`] | distance matrices, distance-decay weights, Laplacians, the renormalized propagation operator |
//! | [`spectral`] | eigenbasis filtering, Chebyshev recurrence filters, the first-order filter |
//! | [`gcn`] | two-layer GCN with dropout, L1 loss, L2 penalty, analytic backward pass and Adam |
//! | [`experiment`] | dataset ingestion, synthetic generator, semi-supervised training, run envelopes, distribution statistics |
//! | [`io`] | checkpoints, CSV formats, config documents, heatmap rasters |
//!
//! Data-parallel loops (pairwise distances, sparse products, independent
//! training runs, raster cells) run on rayon when the `parallel` feature is
//! enabled and fall back to plain iterators otherwise. Both paths produce
//! bit-identical results.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exec;
pub mod experiment;
pub mod gcn;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod spectral;

pub mod commands;

pub use error::{Error, Result};
pub use exec::Execution;
