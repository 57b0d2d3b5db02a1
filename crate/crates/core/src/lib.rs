//! Clustering via nonparametric density estimation.
//!
//! The pipeline estimates a kernel density over the sample, scans its level
//! sets along a probability grid to build a mode function and a cluster
//! tree, extracts cluster cores from the connected components of a
//! connection graph (sorted-order adjacency in 1-D, Delaunay in 2-D/3-D, or
//! pairwise valley-amplitude connections in any dimension), allocates the
//! remaining low-density points by density log-ratios, and scores the result
//! with density-based silhouettes and the adjusted Rand index.

pub mod classify;
pub mod diagnostics;
mod error;
mod gamma;
pub mod graph;
pub mod kde;
pub mod levelset;
mod matrix;
pub mod mixed;
pub mod pipeline;

pub use error::{Error, Result};
pub use matrix::DataMatrix;
