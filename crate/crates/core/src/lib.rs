//! Decision forests with importance-guided split selection.
//!
//! The crate implements ordinary random forests (RF), guided random forests
//! (GRF) where each node's Gini gain is scaled by a per-feature weight derived
//! from a guide forest's importance scores, and the sequential regularized
//! variants (RRF, GRRF). On top of the forests sit a feature-selection
//! pipeline and a replicated train/test benchmarking harness.

pub mod data;
pub mod error;
pub mod eval;
pub mod forest;
pub mod math;
pub mod pipeline;
pub mod rng;
pub mod tree;

pub use data::Dataset;
pub use error::{Error, Result};
pub use forest::{build_forest, Forest, ForestConfig, Mode};
pub use math::{ClassCounts, ImportanceVector, RegWeights};
pub use pipeline::SelectionResult;
pub use tree::{TreeConfig, TreeNode};
