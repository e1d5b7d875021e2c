use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};

/// `n_rows` row indices drawn uniformly with replacement.
pub fn bootstrap_sample<R: Rng + ?Sized>(rng: &mut R, n_rows: usize) -> Vec<usize> {
    (0..n_rows).map(|_| rng.gen_range(0..n_rows)).collect()
}

/// `mtry` distinct feature indices drawn uniformly without replacement,
/// returned in ascending order.
pub fn sample_features<R: Rng + ?Sized>(rng: &mut R, n_features: usize, mtry: usize) -> Result<Vec<usize>> {
    if mtry == 0 || mtry > n_features {
        return Err(Error::MtryExceedsFeatures { mtry, n_features });
    }
    let mut picked = index::sample(rng, n_features, mtry).into_vec();
    picked.sort_unstable();
    Ok(picked)
}
