//! Impurity, gain, importance normalization and per-feature gain weights.
//!
//! A guided forest scales the Gini gain of splitting on feature `i` by a
//! weight `lambda_i = (1 - gamma) + gamma * imp_i / imp_max`, where `imp` are
//! the importance scores of an ordinary random forest and `gamma` in `[0, 1]`
//! controls how strongly low-importance features are penalized. With
//! `gamma = 0` every weight is 1 and the guided forest is an ordinary one.

use crate::error::{Error, Result};

/// Class histogram of the rows reaching a node.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ClassCounts {
    counts: Vec<usize>,
    total: usize,
}

impl ClassCounts {
    /// Panics if `counts` is empty.
    pub fn new(counts: Vec<usize>) -> Self {
        assert!(!counts.is_empty(), "class counts need at least one class");
        let total = counts.iter().sum();
        ClassCounts { counts, total }
    }

    pub fn zeros(n_classes: usize) -> Self {
        Self::new(vec![0; n_classes])
    }

    pub fn from_labels(labels: impl IntoIterator<Item = usize>, n_classes: usize) -> Self {
        let mut counts = vec![0; n_classes];
        for label in labels {
            counts[label] += 1;
        }
        Self::new(counts)
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn add(&mut self, class: usize) {
        self.counts[class] += 1;
        self.total += 1;
    }

    /// Majority class; ties go to the lowest class id.
    pub fn majority(&self) -> usize {
        argmax_lowest(&self.counts)
    }

    /// True when at most one class has a nonzero count.
    pub fn is_pure(&self) -> bool {
        self.counts.iter().filter(|&&c| c > 0).count() <= 1
    }
}

/// Index of the largest entry, lowest index on ties.
pub(crate) fn argmax_lowest(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate().skip(1) {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

/// Gini impurity `1 - sum_c p_c^2`; 0 for an empty node.
pub fn gini_impurity(counts: &ClassCounts) -> f64 {
    impurity_of(&counts.counts, counts.total)
}

pub(crate) fn impurity_of(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    let sum_sq: f64 = counts
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            p * p
        })
        .sum();
    (1.0 - sum_sq).max(0.0)
}

/// Decrease in Gini impurity from splitting `parent` into `left` and `right`.
pub fn gini_gain(parent: &ClassCounts, left: &ClassCounts, right: &ClassCounts) -> Result<f64> {
    let consistent = parent.n_classes() == left.n_classes()
        && parent.n_classes() == right.n_classes()
        && parent
            .counts
            .iter()
            .zip(left.counts.iter().zip(&right.counts))
            .all(|(&p, (&l, &r))| p == l + r);
    if !consistent {
        return Err(Error::ChildCountsMismatch);
    }
    Ok(gain_of(
        &parent.counts,
        parent.total,
        &left.counts,
        left.total,
        &right.counts,
        right.total,
    ))
}

/// Unchecked gain on raw histograms. The split search and the test oracles
/// both go through here so equal partitions produce bit-equal gains.
///
/// The gain is formed as one integer fraction
/// `(S_l n_r n + S_r n_l n - S_p n_l n_r) / (n^2 n_l n_r)`, with `S` the sum of
/// squared class counts, so a split that changes nothing is exactly 0 and
/// equal fractions round to the same f64.
pub(crate) fn gain_of(
    parent: &[usize],
    n_parent: usize,
    left: &[usize],
    n_left: usize,
    right: &[usize],
    n_right: usize,
) -> f64 {
    if n_left == 0 || n_right == 0 {
        return 0.0;
    }
    let sq = |counts: &[usize]| counts.iter().map(|&c| (c as u128) * (c as u128)).sum::<u128>();
    let (n, nl, nr) = (n_parent as u128, n_left as u128, n_right as u128);
    let plus = sq(left) * nr * n + sq(right) * nl * n;
    let minus = sq(parent) * nl * nr;
    if plus <= minus {
        return 0.0;
    }
    (plus - minus) as f64 / (n * n * nl * nr) as f64
}

/// Per-feature importance scores (mean decrease in Gini).
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceVector {
    raw: Vec<f64>,
    max_raw: f64,
}

impl ImportanceVector {
    pub fn new(raw: Vec<f64>) -> Result<Self> {
        if let Some(bad) = raw.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidConfig(format!(
                "importance scores must be finite and non-negative, got {bad}"
            )));
        }
        let max_raw = raw.iter().copied().fold(0.0, f64::max);
        Ok(ImportanceVector { raw, max_raw })
    }

    pub fn raw(&self) -> &[f64] {
        &self.raw
    }

    pub fn max_raw(&self) -> f64 {
        self.max_raw
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    /// Multiplies every score by `factor` (> 0).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.raw.iter().map(|v| v * factor).collect())
    }
}

/// Divides each score by the maximum score, so the top feature maps to 1.
pub fn normalize_importance(imp: &ImportanceVector) -> Result<Vec<f64>> {
    if imp.max_raw <= 0.0 {
        return Err(Error::AllZeroImportance);
    }
    Ok(imp
        .raw
        .iter()
        .map(|&v| v / imp.max_raw)
        .collect())
}

/// Per-feature gain multipliers.
#[derive(Debug, Clone, PartialEq)]
pub struct RegWeights {
    lambda: Vec<f64>,
    gamma: Option<f64>,
}

impl RegWeights {
    /// Weights of an unguided forest: every feature keeps its full gain.
    pub fn ones(n_features: usize) -> Self {
        RegWeights { lambda: vec![1.0; n_features], gamma: Some(0.0) }
    }

    /// Same weight for every feature (the RRF penalty).
    pub fn constant(n_features: usize, value: f64) -> Result<Self> {
        Self::custom(vec![value; n_features])
    }

    /// Weights supplied from outside, e.g. a weights file or domain knowledge.
    pub fn custom(lambda: Vec<f64>) -> Result<Self> {
        for (index, &value) in lambda.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::LambdaOutOfRange { index, value });
            }
        }
        Ok(RegWeights { lambda, gamma: None })
    }

    pub(crate) fn from_parts(lambda: Vec<f64>, gamma: Option<f64>) -> Self {
        RegWeights { lambda, gamma }
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    /// Guidance strength; `None` for weights not derived from importances.
    pub fn gamma(&self) -> Option<f64> {
        self.gamma
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }
}

/// `lambda_i = (1 - gamma) + gamma * normalized_imp[i]`.
pub fn compute_lambda(normalized_imp: &[f64], gamma: f64) -> Result<RegWeights> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::GammaOutOfRange(gamma));
    }
    let mut lambda = Vec::with_capacity(normalized_imp.len());
    for (index, &value) in normalized_imp.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::LambdaOutOfRange { index, value });
        }
        lambda.push(((1.0 - gamma) + gamma * value).clamp(0.0, 1.0));
    }
    Ok(RegWeights::from_parts(lambda, Some(gamma)))
}

#[inline]
pub fn weighted_gain(lambda_i: f64, gain: f64) -> f64 {
    lambda_i * gain
}
