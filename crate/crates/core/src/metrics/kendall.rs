//! Tie-aware Kendall tau distance between two scorings of the lattice.
//!
//! A pair costs 1 when the two scorings order it strictly and oppositely, ½
//! when the first ties it but the second does not, and 0 otherwise.

use rand::Rng;

use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;
use crate::postprocess::PreferenceFn;
use crate::rng::rng_from;

use super::{mean_and_se, Estimate};

/// Largest lattice scored exactly.
pub const KENDALL_EXACT_LIMIT: u64 = 1_000_000;

/// Values closer than this are treated as tied.
pub const TIE_TOL: f64 = 1e-12;

/// Exact distance over all unordered pairs of lattice points.
pub fn kendall_tau_distance(
    fa: &impl PreferenceFn,
    fb: &impl PreferenceFn,
    spec: &LatticeSpec,
) -> Result<f64> {
    if spec.size() > KENDALL_EXACT_LIMIT {
        return Err(Error::TooLarge(format!(
            "exact Kendall distance over {} points; use the sampled estimator",
            spec.size()
        )));
    }
    let (a, b): (Vec<f64>, Vec<f64>) = spec.points().map(|x| (fa.value(&x), fb.value(&x))).unzip();
    Ok(kendall_tau_from_values(&a, &b, TIE_TOL))
}

/// Exact distance between two score vectors in `O(n log n)`.
///
/// Scores are first grouped into tie classes: sorted values whose successive
/// gaps are at most `tol` share a class.
pub fn kendall_tau_from_values(a: &[f64], b: &[f64], tol: f64) -> f64 {
    assert_eq!(a.len(), b.len(), "score vectors differ in length");
    let n = a.len();
    if n < 2 {
        return 0.0;
    }
    let ca = tie_classes(a, tol);
    let cb = tie_classes(b, tol);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by_key(|&i| (ca[i], cb[i]));

    let pairs = |k: u64| k * k.saturating_sub(1) / 2;
    let mut tied_a = 0u64;
    let mut tied_both = 0u64;
    let (mut run_a, mut run_ab) = (1u64, 1u64);
    for w in order.windows(2) {
        let (i, j) = (w[0], w[1]);
        if ca[i] == ca[j] {
            run_a += 1;
            if cb[i] == cb[j] {
                run_ab += 1;
            } else {
                tied_both += pairs(run_ab);
                run_ab = 1;
            }
        } else {
            tied_a += pairs(run_a);
            tied_both += pairs(run_ab);
            run_a = 1;
            run_ab = 1;
        }
    }
    tied_a += pairs(run_a);
    tied_both += pairs(run_ab);

    let mut seq: Vec<usize> = order.iter().map(|&i| cb[i]).collect();
    let discordant = count_inversions(&mut seq);
    let total = pairs(n as u64) as f64;
    (discordant as f64 + 0.5 * (tied_a - tied_both) as f64) / total
}

/// Dense class index per value; equal indices mean tied.
fn tie_classes(values: &[f64], tol: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_unstable_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut class = vec![0usize; values.len()];
    let mut current = 0;
    for k in 1..order.len() {
        if values[order[k]] - values[order[k - 1]] > tol {
            current += 1;
        }
        class[order[k]] = current;
    }
    class
}

/// Number of pairs `i < j` with `seq[i] > seq[j]`; sorts `seq` in the process.
fn count_inversions(seq: &mut [usize]) -> u64 {
    let mut buf = seq.to_vec();
    sort_count(seq, &mut buf)
}

fn sort_count(seq: &mut [usize], buf: &mut [usize]) -> u64 {
    let n = seq.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut count = sort_count(&mut seq[..mid], &mut buf[..mid]);
    count += sort_count(&mut seq[mid..], &mut buf[mid..]);
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if seq[j] < seq[i] {
            buf[k] = seq[j];
            count += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = seq[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&seq[i..mid]);
    let k2 = k + mid - i;
    buf[k2..n].copy_from_slice(&seq[j..n]);
    seq.copy_from_slice(&buf[..n]);
    count
}

/// Monte-Carlo estimate from `samples` uniformly drawn pairs of distinct
/// points, for lattices too large to enumerate.
pub fn kendall_tau_sampled(
    fa: &impl PreferenceFn,
    fb: &impl PreferenceFn,
    spec: &LatticeSpec,
    samples: usize,
    seed: u64,
) -> Result<Estimate> {
    if spec.size() < 2 {
        return Err(Error::InvalidInput("need at least two lattice points".into()));
    }
    if samples == 0 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    let mut rng = rng_from(seed);
    let size = spec.size();
    let costs: Vec<f64> = (0..samples)
        .map(|_| {
            let i = rng.random_range(0..size);
            let mut j = rng.random_range(0..size - 1);
            if j >= i {
                j += 1;
            }
            let (x, y) = (spec.point_at(i), spec.point_at(j));
            pair_cost(
                fa.value(&x) - fa.value(&y),
                fb.value(&x) - fb.value(&y),
                TIE_TOL,
            )
        })
        .collect();
    Ok(mean_and_se(&costs))
}

fn pair_cost(da: f64, db: f64, tol: f64) -> f64 {
    let tied_a = da.abs() <= tol;
    let tied_b = db.abs() <= tol;
    match (tied_a, tied_b) {
        (_, true) => 0.0,
        (true, false) => 0.5,
        (false, false) if (da > 0.0) != (db > 0.0) => 1.0,
        _ => 0.0,
    }
}
