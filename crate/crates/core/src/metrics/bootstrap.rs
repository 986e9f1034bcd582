use rand::Rng;
use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from};

/// Quantile of sorted data by linear interpolation between order statistics.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Percentile bootstrap 95% interval of `statistic` over `b` resamples.
///
/// Each resample draws from its own seed derived from `seed`, so the result
/// does not depend on how resamples are scheduled across threads.
pub fn bootstrap_ci<F>(statistic: F, ds: &Dataset, b: usize, seed: u64) -> Result<(f64, f64)>
where
    F: Fn(&Dataset) -> Result<f64> + Sync,
{
    if b < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 resamples, got {b}")));
    }
    let n = ds.len();
    let mut stats = (0..b)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from(derive_seed(seed, &[i as u64]));
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            statistic(&ds.subset(&idx)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    if let Some(bad) = stats.iter().find(|s| s.is_nan()) {
        return Err(Error::InvalidInput(format!("statistic returned {bad}")));
    }
    stats.sort_by(f64::total_cmp);
    Ok((percentile(&stats, 0.025), percentile(&stats, 0.975)))
}
