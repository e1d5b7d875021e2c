//! Ensembles: RF, GRF, RRF and GRRF.
//!
//! RF and GRF trees are independent. Tree `t` draws all of its randomness from
//! stream `t` of the master seed, so the forest is identical for any worker
//! count. RRF and GRRF share a set of used features across trees, which makes
//! every tree depend on all earlier ones; those modes build on one thread in
//! tree order.

mod io;

pub use io::{read_model, write_model, MODEL_MAGIC};

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::math::{argmax_lowest, ImportanceVector, RegWeights};
use crate::rng;
use crate::tree::{default_mtry, FeatureIndex, Grower, RegMode, TreeConfig, TreeNode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Ordinary random forest.
    Rf,
    /// Guided: gains scaled by per-feature weights, trees independent.
    Grf,
    /// Regularized: constant penalty on features no earlier split used.
    Rrf,
    /// Guided regularized: importance-derived penalty on unused features.
    Grrf,
}

impl Mode {
    pub fn is_sequential(self) -> bool {
        matches!(self, Mode::Rrf | Mode::Grrf)
    }

    pub fn default_gamma(self) -> f64 {
        match self {
            Mode::Rf | Mode::Rrf => 0.0,
            Mode::Grf => 1.0,
            Mode::Grrf => 0.1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Rf => "RF",
            Mode::Grf => "GRF",
            Mode::Rrf => "RRF",
            Mode::Grrf => "GRRF",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rf" => Ok(Mode::Rf),
            "grf" => Ok(Mode::Grf),
            "rrf" => Ok(Mode::Rrf),
            "grrf" => Ok(Mode::Grrf),
            other => Err(Error::InvalidConfig(format!("unknown mode {other:?} (expected rf, grf, rrf or grrf)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub mode: Mode,
    /// Guidance strength for GRF/GRRF weights; ignored by RF.
    pub gamma: f64,
    /// Candidate features per node; `None` means `floor(sqrt(n_features))`.
    pub mtry: Option<usize>,
    pub master_seed: u64,
    pub min_leaf_size: usize,
    pub max_depth: Option<usize>,
    /// RRF penalty when no weights are supplied.
    pub rrf_lambda: f64,
    /// Worker threads for independent trees; `None` uses the ambient rayon
    /// pool. Never affects the result.
    pub workers: Option<usize>,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self::new(Mode::Rf)
    }
}

impl ForestConfig {
    pub fn new(mode: Mode) -> Self {
        ForestConfig {
            n_trees: 1000,
            mode,
            gamma: mode.default_gamma(),
            mtry: None,
            master_seed: 0,
            min_leaf_size: 1,
            max_depth: None,
            rrf_lambda: 0.8,
            workers: None,
        }
    }

    pub fn with_trees(mut self, n_trees: usize) -> Self {
        self.n_trees = n_trees;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }

    pub fn tree_config(&self, n_features: usize) -> TreeConfig {
        TreeConfig {
            mtry: self.mtry.unwrap_or_else(|| default_mtry(n_features)),
            min_leaf_size: self.min_leaf_size,
            max_depth: self.max_depth,
            seed: self.master_seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    pub(crate) trees: Vec<TreeNode>,
    pub(crate) config: ForestConfig,
    pub(crate) weights: RegWeights,
    pub(crate) n_features: usize,
    pub(crate) n_classes: usize,
    pub(crate) class_names: Vec<String>,
    /// Original columns the trees were allowed to use, for forests trained on
    /// a column subset. Split features are stored as original indices.
    pub(crate) columns: Option<Vec<usize>>,
    pub(crate) oob_error: Option<f64>,
}

/// Trains a forest. `weights` are required for GRF and GRRF, optional for RRF
/// (default: constant `config.rrf_lambda`) and ignored for RF.
pub fn build_forest(data: &Dataset, config: &ForestConfig, weights: Option<&RegWeights>) -> Result<Forest> {
    let p = data.n_features();
    if config.n_trees == 0 {
        return Err(Error::InvalidConfig("n_trees must be at least 1".into()));
    }
    if let Some(w) = weights {
        if w.len() != p {
            return Err(Error::LambdaLengthMismatch { expected: p, got: w.len() });
        }
    }
    let weights = match config.mode {
        Mode::Rf => RegWeights::ones(p),
        Mode::Grf | Mode::Grrf => weights.cloned().ok_or(Error::MissingWeights(config.mode.name()))?,
        Mode::Rrf => match weights {
            Some(w) => w.clone(),
            None => RegWeights::constant(p, config.rrf_lambda)?,
        },
    };
    let tree_config = config.tree_config(p);
    tree_config.validate(p)?;
    let mut resolved = config.clone();
    resolved.mtry = Some(tree_config.mtry);
    if config.mode == Mode::Rf {
        resolved.gamma = 0.0;
    }

    let index = FeatureIndex::new(data);
    let grower = Grower::new(data, &index, &tree_config, weights.lambda());
    let seed = config.master_seed;

    let grown: Vec<(TreeNode, Vec<usize>)> = if config.mode.is_sequential() {
        let mut used = vec![false; p];
        (0..config.n_trees)
            .map(|t| grower.grow(&mut rng::tree_rng(seed, t as u64), RegMode::Sequential(&mut used)))
            .collect()
    } else {
        let build = || {
            (0..config.n_trees)
                .into_par_iter()
                .map(|t| grower.grow(&mut rng::tree_rng(seed, t as u64), RegMode::Off))
                .collect()
        };
        match config.workers {
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n.clamp(1, config.n_trees))
                .build()
                .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?
                .install(build),
            None => build(),
        }
    };

    let oob_error = out_of_bag_error(data, &grown);
    Ok(Forest {
        trees: grown.into_iter().map(|(tree, _)| tree).collect(),
        config: resolved,
        weights,
        n_features: p,
        n_classes: data.n_classes(),
        class_names: data.class_names().to_vec(),
        columns: None,
        oob_error,
    })
}

/// Majority vote of each row over the trees that did not sample it.
/// Rows sampled by every tree are skipped; `None` if no row is out of bag.
fn out_of_bag_error(data: &Dataset, grown: &[(TreeNode, Vec<usize>)]) -> Option<f64> {
    let n = data.n_rows();
    let k = data.n_classes();
    let mut votes = vec![0usize; n * k];
    let mut in_bag = vec![false; n];
    for (tree, sample) in grown {
        in_bag.iter_mut().for_each(|b| *b = false);
        for &r in sample {
            in_bag[r] = true;
        }
        for r in (0..n).filter(|&r| !in_bag[r]) {
            votes[r * k + tree.classify(data.row(r))] += 1;
        }
    }
    let mut scored = 0usize;
    let mut wrong = 0usize;
    for r in 0..n {
        let v = &votes[r * k..(r + 1) * k];
        if v.iter().any(|&c| c > 0) {
            scored += 1;
            if argmax_lowest(v) != data.labels()[r] {
                wrong += 1;
            }
        }
    }
    (scored > 0).then(|| wrong as f64 / scored as f64)
}

impl Forest {
    pub fn trees(&self) -> &[TreeNode] {
        &self.trees
    }

    pub fn config(&self) -> &ForestConfig {
        &self.config
    }

    pub fn mode(&self) -> Mode {
        self.config.mode
    }

    pub fn weights(&self) -> &RegWeights {
        &self.weights
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn columns(&self) -> Option<&[usize]> {
        self.columns.as_deref()
    }

    /// Out-of-bag error on the training data. Diagnostic only; no selection
    /// step reads it.
    pub fn oob_error(&self) -> Option<f64> {
        self.oob_error
    }

    /// Per-class vote counts for one row.
    pub fn votes(&self, row: &[f64]) -> Result<Vec<usize>> {
        self.check_width(row)?;
        let mut votes = vec![0; self.n_classes];
        for tree in &self.trees {
            votes[tree.classify(row)] += 1;
        }
        Ok(votes)
    }

    /// Majority vote; ties go to the lowest class id.
    pub fn predict_row(&self, row: &[f64]) -> Result<usize> {
        Ok(argmax_lowest(&self.votes(row)?))
    }

    pub fn predict<R: AsRef<[f64]>>(&self, rows: &[R]) -> Result<Vec<usize>> {
        rows.iter().map(|r| self.predict_row(r.as_ref())).collect()
    }

    pub fn predict_dataset(&self, data: &Dataset) -> Result<Vec<usize>> {
        if data.n_features() != self.n_features {
            return Err(Error::FeatureCountMismatch { expected: self.n_features, got: data.n_features() });
        }
        Ok(data.rows().map(|r| argmax_lowest(&self.votes_unchecked(r))).collect())
    }

    fn votes_unchecked(&self, row: &[f64]) -> Vec<usize> {
        let mut votes = vec![0; self.n_classes];
        for tree in &self.trees {
            votes[tree.classify(row)] += 1;
        }
        votes
    }

    fn check_width(&self, row: &[f64]) -> Result<()> {
        if row.len() != self.n_features {
            return Err(Error::FeatureCountMismatch { expected: self.n_features, got: row.len() });
        }
        Ok(())
    }

    /// Mean decrease in Gini: for each feature, the sum over its splits of
    /// `(n_node / n_bootstrap) * gain`, averaged over trees.
    pub fn importance(&self) -> ImportanceVector {
        let mut raw = vec![0.0; self.n_features];
        for tree in &self.trees {
            let n_root = tree.n_samples() as f64;
            for node in tree.nodes() {
                if let TreeNode::Internal { split, gain, n_node, .. } = node {
                    raw[split.feature] += (*n_node as f64 / n_root) * gain;
                }
            }
        }
        let n_trees = self.trees.len() as f64;
        raw.iter_mut().for_each(|v| *v /= n_trees);
        ImportanceVector::new(raw).expect("importances are finite and non-negative")
    }

    /// Distinct features used by any split of any tree.
    pub fn feature_set(&self) -> BTreeSet<usize> {
        self.trees
            .iter()
            .flat_map(|t| t.nodes())
            .filter_map(|n| match n {
                TreeNode::Internal { split, .. } => Some(split.feature),
                TreeNode::Leaf { .. } => None,
            })
            .collect()
    }

    /// Re-expresses a forest trained on `data.select_columns(columns)` in the
    /// original feature space of width `n_original`.
    pub(crate) fn lift_columns(mut self, columns: &[usize], n_original: usize) -> Forest {
        fn remap(node: &mut TreeNode, columns: &[usize]) {
            if let TreeNode::Internal { split, left, right, .. } = node {
                split.feature = columns[split.feature];
                remap(left, columns);
                remap(right, columns);
            }
        }
        for tree in &mut self.trees {
            remap(tree, columns);
        }
        let mut lambda = vec![0.0; n_original];
        for (&c, &l) in columns.iter().zip(self.weights.lambda()) {
            lambda[c] = l;
        }
        self.weights = RegWeights::from_parts(lambda, self.weights.gamma());
        self.n_features = n_original;
        self.columns = Some(columns.to_vec());
        self
    }
}
