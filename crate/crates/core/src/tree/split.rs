//! Weighted best-split search.
//!
//! Candidate thresholds are midpoints between consecutive distinct values of a
//! feature among the rows at a node. Each threshold's Gini gain is multiplied
//! by the feature's weight; the largest positive weighted gain wins, ties
//! going to the lowest feature index and then the lowest threshold.

use crate::data::Dataset;
use crate::math::{gain_of, weighted_gain};

/// Rows with `value <= threshold` go left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub feature: usize,
    pub threshold: f64,
}

impl SplitSpec {
    #[inline]
    pub fn goes_left(&self, row: &[f64]) -> bool {
        row[self.feature] <= self.threshold
    }
}

/// A chosen split with its weighted and unweighted gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitChoice {
    pub split: SplitSpec,
    pub weighted_gain: f64,
    pub gain: f64,
}

/// Midpoint of `lo < hi` that keeps `lo <= mid < hi`.
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo * 0.5 + hi * 0.5;
    if mid < hi && mid >= lo {
        mid
    } else {
        lo
    }
}

/// Per-feature value ranks of a dataset, so node-level sorting works on
/// integer keys.
#[derive(Debug, Clone)]
pub(crate) struct FeatureIndex {
    n_rows: usize,
    /// Column-major: `ranks[f * n_rows + r]` is the rank of row `r`'s value
    /// among the distinct values of feature `f`.
    ranks: Vec<u32>,
    /// Sorted distinct values per feature.
    distinct: Vec<Vec<f64>>,
}

impl FeatureIndex {
    pub(crate) fn new(data: &Dataset) -> Self {
        let n_rows = data.n_rows();
        let mut ranks = vec![0u32; n_rows * data.n_features()];
        let mut distinct = Vec::with_capacity(data.n_features());
        let mut order: Vec<usize> = (0..n_rows).collect();
        for f in 0..data.n_features() {
            order.sort_unstable_by(|&a, &b| data.value(a, f).total_cmp(&data.value(b, f)));
            let col = &mut ranks[f * n_rows..(f + 1) * n_rows];
            let mut values: Vec<f64> = Vec::new();
            for &r in &order {
                let v = data.value(r, f);
                if values.last() != Some(&v) {
                    values.push(v);
                }
                col[r] = (values.len() - 1) as u32;
            }
            distinct.push(values);
        }
        FeatureIndex { n_rows, ranks, distinct }
    }

    #[inline]
    pub(crate) fn rank(&self, feature: usize, row: usize) -> u32 {
        self.ranks[feature * self.n_rows + row]
    }

    pub(crate) fn distinct_count(&self, feature: usize) -> usize {
        self.distinct[feature].len()
    }
}

/// Reusable buffers for the split search.
#[derive(Debug, Default)]
pub(crate) struct Scratch {
    keys: Vec<u64>,
    left: Vec<usize>,
    right: Vec<usize>,
}

pub(crate) struct Splitter<'a> {
    pub index: &'a FeatureIndex,
    pub labels: &'a [usize],
    pub n_classes: usize,
    pub min_leaf_size: usize,
}

impl Splitter<'_> {
    /// Best weighted split of a node holding each `(row, count)` of `rows`
    /// `count` times, over `candidates` (ascending feature indices). `parent`
    /// is the class histogram of the node.
    pub(crate) fn find(
        &self,
        rows: &[(usize, usize)],
        parent: &[usize],
        candidates: &[usize],
        weight: impl Fn(usize) -> f64,
        scratch: &mut Scratch,
    ) -> Option<SplitChoice> {
        let n: usize = parent.iter().sum();
        let min_leaf = self.min_leaf_size.max(1);
        if n < 2 * min_leaf || parent.iter().filter(|&&c| c > 0).count() <= 1 {
            return None;
        }
        let mut best: Option<SplitChoice> = None;
        scratch.left.resize(self.n_classes, 0);
        scratch.right.resize(self.n_classes, 0);
        let parent_sq: u64 = parent.iter().map(|&c| (c * c) as u64).sum();
        for &feature in candidates {
            let lambda = weight(feature);
            if lambda <= 0.0 || self.index.distinct_count(feature) < 2 {
                continue;
            }
            // rank in the high half, position in `rows` in the low half
            scratch.keys.clear();
            scratch
                .keys
                .extend(rows.iter().enumerate().map(|(i, &(r, _))| (u64::from(self.index.rank(feature, r)) << 32) | i as u64));
            scratch.keys.sort_unstable();
            let keys = &scratch.keys;
            let m = keys.len();
            if keys[0] >> 32 == keys[m - 1] >> 32 {
                continue;
            }
            scratch.left.iter_mut().for_each(|c| *c = 0);
            // sums of squared class counts on each side; the exact gain is
            // computed only for thresholds close to this feature's best proxy
            let mut sq_left: u64 = 0;
            let mut sq_right = parent_sq;
            let mut n_left = 0;
            let mut best_proxy = f64::NEG_INFINITY;
            for i in 0..m - 1 {
                let (row, count) = rows[(keys[i] & 0xffff_ffff) as usize];
                let class = self.labels[row];
                let (l, c) = (scratch.left[class] as u64, count as u64);
                sq_left += 2 * l * c + c * c;
                let r = parent[class] as u64 - l;
                sq_right = sq_right + c * c - 2 * r * c;
                scratch.left[class] += count;
                n_left += count;
                let (rank_lo, rank_hi) = (keys[i] >> 32, keys[i + 1] >> 32);
                if rank_lo == rank_hi || n_left < min_leaf {
                    continue;
                }
                if n - n_left < min_leaf {
                    break;
                }
                let proxy = sq_left as f64 / n_left as f64 + sq_right as f64 / (n - n_left) as f64;
                if proxy < best_proxy - best_proxy.abs() * 1e-12 {
                    continue;
                }
                best_proxy = best_proxy.max(proxy);
                for c in 0..self.n_classes {
                    scratch.right[c] = parent[c] - scratch.left[c];
                }
                let gain = gain_of(parent, n, &scratch.left, n_left, &scratch.right, n - n_left);
                let weighted = weighted_gain(lambda, gain);
                if weighted > 0.0 && best.map_or(true, |b| weighted > b.weighted_gain) {
                    let values = &self.index.distinct[feature];
                    best = Some(SplitChoice {
                        split: SplitSpec {
                            feature,
                            threshold: midpoint(values[rank_lo as usize], values[rank_hi as usize]),
                        },
                        weighted_gain: weighted,
                        gain,
                    });
                }
            }
        }
        best
    }

    /// Upper rank boundary of a chosen threshold: rows with rank `<=` the
    /// returned value go left.
    pub(crate) fn left_rank_limit(&self, split: &SplitSpec) -> u32 {
        let values = &self.index.distinct[split.feature];
        values.partition_point(|&v| v <= split.threshold) as u32 - 1
    }
}

/// Distinct rows of `rows` with their multiplicities, in first-seen order.
pub(crate) fn with_counts(rows: &[usize]) -> Vec<(usize, usize)> {
    let Some(&max) = rows.iter().max() else {
        return Vec::new();
    };
    let mut slot = vec![usize::MAX; max + 1];
    let mut out: Vec<(usize, usize)> = Vec::new();
    for &r in rows {
        if slot[r] == usize::MAX {
            slot[r] = out.len();
            out.push((r, 0));
        }
        out[slot[r]].1 += 1;
    }
    out
}

/// Best weighted split of the rows of `data` at `rows` (repeats allowed).
///
/// `lambda[i]` multiplies the gain of feature `i`. Returns `None` when the node
/// is pure, has fewer than `2 * min_leaf_size` rows, or no candidate reaches a
/// positive weighted gain.
pub fn best_split(
    data: &Dataset,
    rows: &[usize],
    candidates: &[usize],
    lambda: &[f64],
    min_leaf_size: usize,
) -> Option<SplitChoice> {
    let index = FeatureIndex::new(data);
    let splitter = Splitter { index: &index, labels: data.labels(), n_classes: data.n_classes(), min_leaf_size };
    let mut parent = vec![0; data.n_classes()];
    for &r in rows {
        parent[data.labels()[r]] += 1;
    }
    let mut sorted = candidates.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    splitter.find(&with_counts(rows), &parent, &sorted, |f| lambda[f], &mut Scratch::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(rows: &[Vec<f64>], labels: &[usize]) -> Dataset {
        Dataset::from_rows(rows, labels.to_vec(), 2).unwrap()
    }

    #[test]
    fn single_feature_perfect_split() {
        let d = data(&[vec![1.0], vec![2.0], vec![3.0], vec![4.0]], &[0, 0, 1, 1]);
        let c = best_split(&d, &[0, 1, 2, 3], &[0], &[1.0], 1).unwrap();
        assert_eq!(c.split, SplitSpec { feature: 0, threshold: 2.5 });
        assert_eq!(c.weighted_gain, 0.5);
    }

    #[test]
    fn pure_node_has_no_split() {
        let d = Dataset::new(vec![1.0, 2.0, 3.0, 4.0], 1, vec![1, 1, 1, 1], 2).unwrap();
        assert!(best_split(&d, &[0, 1, 2, 3], &[0], &[1.0], 1).is_none());
    }

    #[test]
    fn weights_change_the_winner() {
        // feature 0 separates perfectly (gain 0.5); feature 1 separates one row
        let rows = vec![
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, 1.0],
            vec![0.0, 1.0],
            vec![1.0, 1.0],
            vec![1.0, 1.0],
            vec![1.0, 1.0],
            vec![1.0, 1.0],
        ];
        let d = data(&rows, &[0, 0, 0, 0, 1, 1, 1, 1]);
        let all: Vec<usize> = (0..8).collect();
        let unweighted = best_split(&d, &all, &[0, 1], &[1.0, 1.0], 1).unwrap();
        assert_eq!(unweighted.split.feature, 0);
        assert_eq!(unweighted.gain, 0.5);
        let g1 = best_split(&d, &all, &[1], &[1.0, 1.0], 1).unwrap().gain;
        assert!(g1 > 0.05 && g1 < 0.2, "{g1}");
        let weighted = best_split(&d, &all, &[0, 1], &[0.1, 1.0], 1).unwrap();
        assert_eq!(weighted.split.feature, 1);
        assert_eq!(weighted.weighted_gain, g1);
    }

    #[test]
    fn zero_weight_feature_is_never_chosen() {
        let d = data(&[vec![1.0], vec![2.0], vec![3.0], vec![4.0]], &[0, 0, 1, 1]);
        assert!(best_split(&d, &[0, 1, 2, 3], &[0], &[0.0], 1).is_none());
    }

    #[test]
    fn min_leaf_size_limits_thresholds() {
        let d = data(&[vec![1.0], vec![2.0], vec![3.0], vec![4.0]], &[0, 1, 1, 1]);
        let c = best_split(&d, &[0, 1, 2, 3], &[0], &[1.0], 1).unwrap();
        assert_eq!(c.split.threshold, 1.5);
        let c = best_split(&d, &[0, 1, 2, 3], &[0], &[1.0], 2).unwrap();
        assert_eq!(c.split.threshold, 2.5);
        assert!(best_split(&d, &[0, 1, 2], &[0], &[1.0], 2).is_none());
    }

    #[test]
    fn equal_gains_pick_lowest_feature_then_threshold() {
        // both features are identical copies
        let d = data(&[vec![1.0, 1.0], vec![2.0, 2.0], vec![3.0, 3.0], vec![4.0, 4.0]], &[0, 1, 0, 1]);
        let c = best_split(&d, &[0, 1, 2, 3], &[1, 0], &[1.0, 1.0], 1).unwrap();
        assert_eq!(c.split.feature, 0);
        // thresholds 1.5 and 3.5 tie for one-row separation
        assert_eq!(c.split.threshold, 1.5);
    }

    #[test]
    fn midpoint_stays_in_half_open_interval() {
        assert_eq!(midpoint(1.0, 2.0), 1.5);
        let a = 1.0f64;
        let b = f64::from_bits(a.to_bits() + 1);
        let m = midpoint(a, b);
        assert!(a <= m && m < b);
        assert!(midpoint(-f64::MAX, f64::MAX).is_finite());
    }

    #[test]
    fn left_rank_limit_matches_threshold() {
        let d = data(&[vec![1.0], vec![2.0], vec![2.0], vec![4.0]], &[0, 0, 1, 1]);
        let index = FeatureIndex::new(&d);
        let s = Splitter { index: &index, labels: d.labels(), n_classes: 2, min_leaf_size: 1 };
        assert_eq!(s.left_rank_limit(&SplitSpec { feature: 0, threshold: 3.0 }), 1);
        assert_eq!(s.left_rank_limit(&SplitSpec { feature: 0, threshold: 1.5 }), 0);
    }
}
