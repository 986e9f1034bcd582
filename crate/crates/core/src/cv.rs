//! Hold-out selection of the regularization strength.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::postprocess::{post_process, PreferenceFn, PreferenceModel};
use crate::rls::{rls_solve, Lambda};
use crate::rng::rng_from;

/// Share of records used for training inside [`cross_validate`].
pub const TRAIN_FRACTION: f64 = 0.75;

/// Candidate regularization strengths; always contains 0 and infinity.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaGrid {
    values: Vec<Lambda>,
}

impl LambdaGrid {
    pub fn new(values: Vec<Lambda>) -> Result<Self> {
        if !values.contains(&Lambda::Finite(0.0)) || !values.contains(&Lambda::Infinity) {
            return Err(Error::InvalidInput(
                "regularization grid must contain 0 and inf".into(),
            ));
        }
        for v in &values {
            if let Lambda::Finite(x) = *v {
                Lambda::finite(x)?;
            }
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[Lambda] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl Default for LambdaGrid {
    /// `{0} ∪ {2^k : −9 <= k <= 8} ∪ {∞}`.
    fn default() -> Self {
        let mut values = vec![Lambda::Finite(0.0)];
        values.extend((-9..=8).map(|k| Lambda::Finite(2f64.powi(k))));
        values.push(Lambda::Infinity);
        Self { values }
    }
}

impl FromStr for LambdaGrid {
    type Err = Error;

    /// Comma-separated values, `inf` for infinity.
    fn from_str(s: &str) -> Result<Self> {
        let values = s
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<Lambda>>>()?;
        Self::new(values)
    }
}

impl fmt::Display for LambdaGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Size of the training part for `n` records: `⌈fraction · n⌉`, kept in `1..n`.
pub fn train_size(n: usize, fraction: f64) -> usize {
    let raw = (fraction * n as f64 - 1e-9).ceil().max(0.0) as usize;
    raw.clamp(1, n - 1)
}

/// Random partition into a training part of `⌈fraction · N⌉` records and the rest.
/// Both parts keep the original record order.
pub fn split_fraction(ds: &Dataset, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let n = ds.len();
    if n < 2 {
        return Err(Error::TooFewRecords { needed: 2, got: n });
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidInput(format!(
            "split fraction {fraction} is not in (0, 1)"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_from(seed));
    let n0 = train_size(n, fraction);
    let (mut train, mut test) = (order[..n0].to_vec(), order[n0..].to_vec());
    train.sort_unstable();
    test.sort_unstable();
    Ok((ds.subset(&train)?, ds.subset(&test)?))
}

/// The three-to-one split used for selecting the regularization strength.
pub fn split(ds: &Dataset, seed: u64) -> Result<(Dataset, Dataset)> {
    split_fraction(ds, TRAIN_FRACTION, seed)
}

/// Sum of squared errors on `validation`.
pub fn validation_risk(model: &impl PreferenceFn, validation: &Dataset) -> f64 {
    validation
        .records()
        .iter()
        .map(|r| (model.value(r.x()) - r.y()).powi(2))
        .sum()
}

#[derive(Debug, Clone)]
pub struct CvResult {
    pub chosen_lambda: Lambda,
    /// Validation risk per grid value, in grid order.
    pub validation_risks: Vec<(Lambda, f64)>,
    /// Refit of the chosen strength on all records.
    pub final_model: PreferenceModel,
    /// Fit of the chosen strength on the training part only.
    pub pre_refit_model: PreferenceModel,
    pub split_seed: u64,
}

fn fit(ds: &Dataset, lambda: Lambda) -> Result<PreferenceModel> {
    post_process(&rls_solve(ds, lambda)?, ds.spec())
}

/// Index of the smallest risk, preferring the larger strength on ties.
fn select(risks: &[(Lambda, f64)]) -> usize {
    let mut best = 0;
    for (i, &(lambda, risk)) in risks.iter().enumerate() {
        let (best_lambda, best_risk) = risks[best];
        if risk < best_risk || (risk == best_risk && lambda.as_f64() > best_lambda.as_f64()) {
            best = i;
        }
    }
    best
}

/// Fits every grid value on a training split, keeps the one with the lowest
/// validation risk (ties go to the larger strength) and refits it on all data.
pub fn cross_validate(ds: &Dataset, grid: &LambdaGrid, seed: u64) -> Result<CvResult> {
    let (train, validation) = split(ds, seed)?;
    let mut fits: Vec<(Lambda, f64, PreferenceModel)> = grid
        .values()
        .par_iter()
        .map(|&lambda| {
            let model = fit(&train, lambda)?;
            Ok((lambda, validation_risk(&model, &validation), model))
        })
        .collect::<Result<_>>()?;

    let validation_risks: Vec<(Lambda, f64)> = fits.iter().map(|(l, r, _)| (*l, *r)).collect();
    let best = select(&validation_risks);
    let chosen_lambda = fits[best].0;
    let final_model = fit(ds, chosen_lambda)?;
    let pre_refit_model = fits.swap_remove(best).2;
    Ok(CvResult {
        chosen_lambda,
        validation_risks,
        final_model,
        pre_refit_model,
        split_seed: seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{CriteriaVector, LatticeSpec};
    use rand::{Rng, SeedableRng};

    fn v(c: &[u32]) -> CriteriaVector {
        CriteriaVector::new(c.to_vec())
    }

    fn dataset(n: usize) -> Dataset {
        let spec = LatticeSpec::unit(2, 5).unwrap();
        let rows = (0..n)
            .map(|i| (v(&[(i % 5) as u32 + 1, (i / 5 % 5) as u32 + 1]), (i % 7) as f64 / 7.0))
            .collect();
        Dataset::from_unit(spec, rows).unwrap()
    }

    #[test]
    fn split_sizes() {
        let (a, b) = split(&dataset(8), 1).unwrap();
        assert_eq!((a.len(), b.len()), (6, 2));
        let (a, b) = split(&dataset(4), 1).unwrap();
        assert_eq!((a.len(), b.len()), (3, 1));
        for n in 2..200 {
            assert_eq!(train_size(n, 0.75), (3 * n).div_ceil(4).min(n - 1));
        }
        assert_eq!(train_size(10, 0.8), 8);
        assert!(matches!(split(&dataset(1), 1), Err(Error::TooFewRecords { .. })));
    }

    #[test]
    fn split_is_deterministic_partition() {
        let ds = dataset(37);
        let (a1, b1) = split(&ds, 99).unwrap();
        let (a2, b2) = split(&ds, 99).unwrap();
        assert_eq!(a1, a2);
        assert_eq!(b1, b2);
        let (a3, _) = split(&ds, 100).unwrap();
        assert_ne!(a1, a3);
        assert_eq!(a1.len() + b1.len(), 37);
    }

    #[test]
    fn grid_defaults_and_parsing() {
        let g = LambdaGrid::default();
        assert_eq!(g.len(), 20);
        assert_eq!(g.values()[1], Lambda::Finite(2f64.powi(-9)));
        let parsed: LambdaGrid = "0, 0.5, 2, inf".parse().unwrap();
        assert_eq!(parsed.len(), 4);
        assert_eq!(parsed.to_string(), "0,0.5,2,inf");
        assert!("0.5,inf".parse::<LambdaGrid>().is_err());
        assert!("0,x,inf".parse::<LambdaGrid>().is_err());
    }

    #[test]
    fn risk_is_a_sum() {
        let spec = LatticeSpec::unit(1, 2).unwrap();
        let ds = Dataset::from_unit(spec, vec![(v(&[1]), 0.0), (v(&[2]), 1.0), (v(&[2]), 1.0)]).unwrap();
        let half = |_: &CriteriaVector| 0.5;
        assert_eq!(validation_risk(&half, &ds), 0.75);
        let perfect = |x: &CriteriaVector| f64::from(x.coords()[0] - 1);
        assert_eq!(validation_risk(&perfect, &ds), 0.0);
    }

    #[test]
    fn exactly_linear_data_selects_zero_risk() {
        let spec = LatticeSpec::unit(2, 5).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let rows = (0..60)
            .map(|_| {
                let x = v(&[rng.random_range(1..=5), rng.random_range(1..=5)]);
                let y = 0.1 * f64::from(x.coords()[0]) + 0.08 * f64::from(x.coords()[1]) - 0.15;
                (x, y)
            })
            .collect();
        let ds = Dataset::from_unit(spec, rows).unwrap();
        let cv = cross_validate(&ds, &LambdaGrid::default(), 3).unwrap();
        let inf_risk = cv.validation_risks.iter().find(|(l, _)| l.is_infinite()).unwrap().1;
        assert!(inf_risk < 1e-20);
        assert_eq!(cv.chosen_lambda, Lambda::Infinity);
        for r in ds.records() {
            assert!((cv.final_model.value(r.x()) - r.y()).abs() < 1e-9);
        }
    }

    #[test]
    fn duplicated_consistent_data_zero_risk_at_zero() {
        let spec = LatticeSpec::unit(2, 3).unwrap();
        let mut rows = Vec::new();
        for x in spec.points() {
            let y = f64::from(x.coords()[0] * x.coords()[1]) / 9.0;
            for _ in 0..4 {
                rows.push((x.clone(), y));
            }
        }
        let ds = Dataset::from_unit(spec, rows).unwrap();
        let cv = cross_validate(&ds, &LambdaGrid::default(), 8).unwrap();
        assert_eq!(cv.validation_risks[0].0, Lambda::Finite(0.0));
        assert!(cv.validation_risks[0].1 < 1e-24);
        let min = cv.validation_risks.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
        let chosen = cv.validation_risks.iter().find(|r| r.0 == cv.chosen_lambda).unwrap().1;
        assert_eq!(chosen, min);
    }

    #[test]
    fn ties_go_to_larger_lambda() {
        let risks = [
            (Lambda::Finite(0.0), 1.0),
            (Lambda::Infinity, 1.0),
            (Lambda::Finite(2.0), 1.0),
        ];
        assert_eq!(select(&risks), 1);
        let risks = [
            (Lambda::Finite(4.0), 0.5),
            (Lambda::Finite(0.5), 0.5),
            (Lambda::Infinity, 0.7),
        ];
        assert_eq!(select(&risks), 0);
    }

    #[test]
    fn deterministic() {
        let ds = dataset(50);
        let a = cross_validate(&ds, &LambdaGrid::default(), 17).unwrap();
        let b = cross_validate(&ds, &LambdaGrid::default(), 17).unwrap();
        assert_eq!(a.chosen_lambda, b.chosen_lambda);
        assert_eq!(a.validation_risks, b.validation_risks);
        assert_eq!(a.final_model.trained_values(), b.final_model.trained_values());
    }
}
