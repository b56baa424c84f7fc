//! Finite-n simulation laboratory for minimal spanning trees on heavy-tailed
//! rank-1 inhomogeneous random graphs with degree exponent `tau` in (3, 4).
//!
//! The crate covers the whole pipeline: weight sequences and their scaling
//! constants, the percolation ensemble that couples every percolated graph
//! with its MST, the finite multiplicative coalescent, breadth-first
//! exploration walks, branching-process comparisons, tilted p-tree component
//! samplers, and the tree metrics used by the scaling experiments.
//!
//! Vertex indices in the Rust API are 0-based: index `0` is the heaviest
//! vertex ("vertex 1" in every file format, CSV and report, which are
//! 1-based).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod branching;
pub mod coalescent;
pub mod dsu;
pub mod error;
pub mod experiments;
pub mod exploration;
pub mod graphgen;
pub mod metrics;
pub mod mst;
pub mod numeric;
pub mod oracle;
#[cfg(test)]
mod properties;
pub mod rng;
pub mod tilted;
pub mod weights;

pub use error::{Error, Result};
pub use graphgen::{ComponentPartition, Kernel, PercolationEnsemble, SparseGraph};
pub use mst::TreeStructure;
pub use rng::Seed;
pub use weights::WeightSequence;
