use rand::Rng;

use super::Dataset;
use crate::error::{Error, Result};
use crate::rng;

/// Two-relevant-feature benchmark: uniform noise features, and a class that
/// is 1 exactly when `x[a] + x[b]` lies above its sample median.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n_rows: usize,
    pub n_features: usize,
    pub relevant_features: (usize, usize),
    pub value_range: (f64, f64),
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_rows: 500,
            n_features: 500,
            relevant_features: (0, 20),
            value_range: (-1.0, 1.0),
            seed: 1,
        }
    }
}

impl SyntheticSpec {
    pub fn with_seed(seed: u64) -> Self {
        SyntheticSpec { seed, ..Default::default() }
    }

    fn validate(&self) -> Result<()> {
        let (a, b) = self.relevant_features;
        if a == b || a >= self.n_features || b >= self.n_features {
            return Err(Error::InvalidConfig(format!(
                "relevant features ({a}, {b}) must be distinct and below {}",
                self.n_features
            )));
        }
        if self.n_rows < 2 {
            return Err(Error::InvalidConfig("synthetic data needs at least 2 rows".into()));
        }
        let (lo, hi) = self.value_range;
        if !(lo < hi && lo.is_finite() && hi.is_finite()) {
            return Err(Error::InvalidConfig(format!("bad value range [{lo}, {hi}]")));
        }
        Ok(())
    }
}

/// Median with linear interpolation between the two middle order statistics.
fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Generates the dataset; class names are `"-1"` and `"1"`.
pub fn simulate_dataset(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = rng::seeded(spec.seed);
    let (lo, hi) = spec.value_range;
    let values: Vec<f64> = (0..spec.n_rows * spec.n_features)
        .map(|_| rng.gen_range(lo..=hi))
        .collect();
    let (a, b) = spec.relevant_features;
    let scores: Vec<f64> = values
        .chunks_exact(spec.n_features)
        .map(|row| row[a] + row[b])
        .collect();
    let threshold = median(&scores);
    let labels = scores.iter().map(|&s| usize::from(s > threshold)).collect();
    Dataset::with_names(values, spec.n_features, labels, vec!["-1".into(), "1".into()], None)
}
