use rand::seq::SliceRandom;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::{self, derive_seed, tags};

/// Replicated train/test protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitPlan {
    pub replicate_count: usize,
    pub train_fraction: f64,
    pub stratified: bool,
    pub base_seed: u64,
}

impl Default for SplitPlan {
    fn default() -> Self {
        SplitPlan { replicate_count: 100, train_fraction: 2.0 / 3.0, stratified: true, base_seed: 0 }
    }
}

impl SplitPlan {
    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!("train fraction {} is not in (0, 1)", self.train_fraction)));
        }
        if self.replicate_count == 0 {
            return Err(Error::InvalidConfig("replicate count must be at least 1".into()));
        }
        Ok(())
    }

    /// Master seed shared by every method's forests in one replicate.
    pub fn replicate_seed(&self, replicate: usize) -> u64 {
        derive_seed(derive_seed(self.base_seed, tags::REPLICATE), replicate as u64)
    }
}

/// Row indices `(train, test)` for one replicate, each ascending.
pub fn split_indices(data: &Dataset, plan: &SplitPlan, replicate: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    plan.validate()?;
    if replicate >= plan.replicate_count {
        return Err(Error::InvalidConfig(format!(
            "replicate {replicate} out of range for {} replicates",
            plan.replicate_count
        )));
    }
    for (class, &count) in data.class_sizes().iter().enumerate() {
        if count < 2 {
            return Err(Error::ClassTooSmall { class: data.class_names()[class].clone(), count });
        }
    }
    let mut rng = rng::seeded(derive_seed(derive_seed(plan.base_seed, tags::SPLIT), replicate as u64));
    let take = |n: usize| ((n as f64 * plan.train_fraction).round() as usize).clamp(1, n - 1);

    let mut train = Vec::new();
    let mut test = Vec::new();
    if plan.stratified {
        for class in 0..data.n_classes() {
            let mut rows: Vec<usize> = (0..data.n_rows()).filter(|&r| data.labels()[r] == class).collect();
            rows.shuffle(&mut rng);
            let k = take(rows.len());
            train.extend_from_slice(&rows[..k]);
            test.extend_from_slice(&rows[k..]);
        }
    } else {
        let mut rows: Vec<usize> = (0..data.n_rows()).collect();
        rows.shuffle(&mut rng);
        let k = take(rows.len());
        train.extend_from_slice(&rows[..k]);
        test.extend_from_slice(&rows[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn split_train_test(data: &Dataset, plan: &SplitPlan, replicate: usize) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(data, plan, replicate)?;
    Ok((data.subset_rows(&train), data.subset_rows(&test)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_classes(per_class: usize) -> Dataset {
        let n = 2 * per_class;
        let values = (0..n).map(|i| i as f64).collect();
        let labels = (0..n).map(|i| i % 2).collect();
        Dataset::new(values, 1, labels, 2).unwrap()
    }

    #[test]
    fn stratified_exact_division() {
        let d = two_classes(9);
        let (train, test) = split_train_test(&d, &SplitPlan::default(), 0).unwrap();
        assert_eq!(train.class_sizes(), vec![6, 6]);
        assert_eq!(test.class_sizes(), vec![3, 3]);
    }

    #[test]
    fn deterministic_and_partitioning() {
        let d = two_classes(20);
        let plan = SplitPlan { base_seed: 42, ..Default::default() };
        let a = split_indices(&d, &plan, 3).unwrap();
        assert_eq!(a, split_indices(&d, &plan, 3).unwrap());
        assert_ne!(a, split_indices(&d, &plan, 4).unwrap());
        let mut all: Vec<usize> = a.0.iter().chain(&a.1).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..40).collect::<Vec<_>>());
    }

    #[test]
    fn class_share_within_one_row() {
        let labels: Vec<usize> = (0..61).map(|i| if i < 7 { 0 } else if i < 30 { 1 } else { 2 }).collect();
        let d = Dataset::new((0..61).map(f64::from).collect(), 1, labels, 3).unwrap();
        let plan = SplitPlan::default();
        let (train, _) = split_train_test(&d, &plan, 1).unwrap();
        for (got, total) in train.class_sizes().iter().zip(d.class_sizes()) {
            assert!((*got as f64 - total as f64 * plan.train_fraction).abs() <= 1.0);
        }
    }

    #[test]
    fn unstratified_sizes() {
        let d = two_classes(15);
        let plan = SplitPlan { stratified: false, train_fraction: 0.5, ..Default::default() };
        let (train, test) = split_indices(&d, &plan, 0).unwrap();
        assert_eq!((train.len(), test.len()), (15, 15));
    }

    #[test]
    fn errors() {
        let d = Dataset::new(vec![1.0, 2.0, 3.0], 1, vec![0, 0, 1], 2).unwrap();
        assert!(matches!(split_indices(&d, &SplitPlan::default(), 0), Err(Error::ClassTooSmall { count: 1, .. })));
        let d = two_classes(5);
        assert!(split_indices(&d, &SplitPlan { train_fraction: 1.0, ..Default::default() }, 0).is_err());
        assert!(split_indices(&d, &SplitPlan { replicate_count: 2, ..Default::default() }, 2).is_err());
    }
}
