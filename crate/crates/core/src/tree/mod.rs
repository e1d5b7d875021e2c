//! CART-style classification trees grown on a bootstrap sample.
//!
//! At every node a fresh random subset of `mtry` features is drawn and the
//! split maximizing `lambda_i * gain_i` is taken. In sequential
//! (regularized) mode, features that some earlier split already used escape
//! the penalty and compete with their full gain; every feature a split uses
//! joins that shared set.

mod sampling;
mod split;

pub use sampling::{bootstrap_sample, sample_features};
pub use split::{best_split, SplitChoice, SplitSpec};

pub(crate) use split::{with_counts, FeatureIndex, Scratch, Splitter};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::math::{ClassCounts, RegWeights};
use crate::rng::{self, TreeRng};

#[derive(Debug, Clone, PartialEq)]
pub struct TreeConfig {
    pub mtry: usize,
    pub min_leaf_size: usize,
    pub max_depth: Option<usize>,
    pub seed: u64,
}

impl TreeConfig {
    /// `mtry = floor(sqrt(n_features))`, leaves of one row, unlimited depth.
    pub fn for_features(n_features: usize) -> Self {
        TreeConfig { mtry: default_mtry(n_features), min_leaf_size: 1, max_depth: None, seed: 0 }
    }

    pub(crate) fn validate(&self, n_features: usize) -> Result<()> {
        if self.mtry == 0 || self.mtry > n_features {
            return Err(Error::MtryExceedsFeatures { mtry: self.mtry, n_features });
        }
        if self.min_leaf_size == 0 {
            return Err(Error::InvalidConfig("min_leaf_size must be at least 1".into()));
        }
        if self.max_depth == Some(0) {
            return Err(Error::InvalidConfig("max_depth must be at least 1".into()));
        }
        Ok(())
    }
}

pub fn default_mtry(n_features: usize) -> usize {
    ((n_features as f64).sqrt().floor() as usize).clamp(1, n_features.max(1))
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Leaf {
        counts: ClassCounts,
        class: usize,
    },
    Internal {
        split: SplitSpec,
        /// Unweighted Gini decrease of the split.
        gain: f64,
        /// Bootstrap rows reaching this node.
        n_node: usize,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn leaf(counts: ClassCounts) -> Self {
        let class = counts.majority();
        TreeNode::Leaf { counts, class }
    }

    /// Number of training rows at this node.
    pub fn n_samples(&self) -> usize {
        match self {
            TreeNode::Leaf { counts, .. } => counts.total(),
            TreeNode::Internal { n_node, .. } => *n_node,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, TreeNode::Leaf { .. })
    }

    /// Class predicted for `row`, without checking its width.
    pub fn classify(&self, row: &[f64]) -> usize {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { class, .. } => return *class,
                TreeNode::Internal { split, left, right, .. } => {
                    node = if split.goes_left(row) { left } else { right };
                }
            }
        }
    }

    /// Pre-order traversal.
    pub fn nodes(&self) -> Nodes<'_> {
        Nodes { stack: vec![self] }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

pub struct Nodes<'a> {
    stack: Vec<&'a TreeNode>,
}

impl<'a> Iterator for Nodes<'a> {
    type Item = &'a TreeNode;

    fn next(&mut self) -> Option<&'a TreeNode> {
        let node = self.stack.pop()?;
        if let TreeNode::Internal { left, right, .. } = node {
            self.stack.push(right);
            self.stack.push(left);
        }
        Some(node)
    }
}

pub fn predict_tree(tree: &TreeNode, row: &[f64], n_features: usize) -> Result<usize> {
    if row.len() != n_features {
        return Err(Error::FeatureCountMismatch { expected: n_features, got: row.len() });
    }
    Ok(tree.classify(row))
}

/// Whether split gains are penalized only for features not yet used.
#[derive(Debug)]
pub enum RegMode<'a> {
    Off,
    /// Flags of features used by earlier splits, shared across trees built in
    /// order.
    Sequential(&'a mut Vec<bool>),
}

/// Grows one tree. The random stream is stream 0 of `config.seed`, so this
/// equals tree 0 of a forest whose master seed is `config.seed`.
pub fn build_tree(data: &Dataset, config: &TreeConfig, weights: &RegWeights, reg_mode: RegMode<'_>) -> Result<TreeNode> {
    config.validate(data.n_features())?;
    if weights.len() != data.n_features() {
        return Err(Error::LambdaLengthMismatch { expected: data.n_features(), got: weights.len() });
    }
    let index = FeatureIndex::new(data);
    let grower = Grower::new(data, &index, config, weights.lambda());
    let mut rng = rng::tree_rng(config.seed, 0);
    Ok(grower.grow(&mut rng, reg_mode).0)
}

/// Shared, read-only state for growing the trees of one forest.
pub(crate) struct Grower<'a> {
    splitter: Splitter<'a>,
    n_rows: usize,
    n_features: usize,
    mtry: usize,
    max_depth: Option<usize>,
    lambda: &'a [f64],
}

impl<'a> Grower<'a> {
    pub(crate) fn new(data: &'a Dataset, index: &'a FeatureIndex, config: &TreeConfig, lambda: &'a [f64]) -> Self {
        Grower {
            splitter: Splitter {
                index,
                labels: data.labels(),
                n_classes: data.n_classes(),
                min_leaf_size: config.min_leaf_size,
            },
            n_rows: data.n_rows(),
            n_features: data.n_features(),
            mtry: config.mtry,
            max_depth: config.max_depth,
            lambda,
        }
    }

    /// Returns the tree and its bootstrap sample.
    pub(crate) fn grow(&self, rng: &mut TreeRng, mut reg_mode: RegMode<'_>) -> (TreeNode, Vec<usize>) {
        let sample = bootstrap_sample(rng, self.n_rows);
        let mut scratch = Scratch::default();
        let root = self.grow_node(with_counts(&sample), 0, rng, &mut reg_mode, &mut scratch);
        (root, sample)
    }

    fn counts(&self, rows: &[(usize, usize)]) -> Vec<usize> {
        let mut counts = vec![0; self.splitter.n_classes];
        for &(r, c) in rows {
            counts[self.splitter.labels[r]] += c;
        }
        counts
    }

    fn grow_node(
        &self,
        rows: Vec<(usize, usize)>,
        depth: usize,
        rng: &mut TreeRng,
        reg_mode: &mut RegMode<'_>,
        scratch: &mut Scratch,
    ) -> TreeNode {
        let counts = self.counts(&rows);
        let n_node: usize = counts.iter().sum();
        let at_depth_limit = self.max_depth.is_some_and(|d| depth >= d);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if at_depth_limit || pure || n_node < 2 * self.splitter.min_leaf_size {
            return TreeNode::leaf(ClassCounts::new(counts));
        }

        let candidates = sample_features(rng, self.n_features, self.mtry)
            .expect("mtry validated against n_features");
        let choice = match reg_mode {
            RegMode::Off => self.splitter.find(&rows, &counts, &candidates, |f| self.lambda[f], scratch),
            RegMode::Sequential(used) => {
                let used: &Vec<bool> = used;
                self.splitter.find(
                    &rows,
                    &counts,
                    &candidates,
                    |f| if used[f] { 1.0 } else { self.lambda[f] },
                    scratch,
                )
            }
        };
        let Some(choice) = choice else {
            return TreeNode::leaf(ClassCounts::new(counts));
        };
        if let RegMode::Sequential(used) = reg_mode {
            used[choice.split.feature] = true;
        }

        let limit = self.splitter.left_rank_limit(&choice.split);
        let feature = choice.split.feature;
        let (left_rows, right_rows): (Vec<_>, Vec<_>) = rows
            .iter()
            .partition(|&&(r, _)| self.splitter.index.rank(feature, r) <= limit);
        drop(rows);
        let left = self.grow_node(left_rows, depth + 1, rng, reg_mode, scratch);
        let right = self.grow_node(right_rows, depth + 1, rng, reg_mode, scratch);
        TreeNode::Internal {
            split: choice.split,
            gain: choice.gain,
            n_node,
            left: Box::new(left),
            right: Box::new(right),
        }
    }
}
