//! Error measures for fitted preference functions.

mod bootstrap;
mod kendall;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::isotonic::{isotonic_fit, WeightedTargets};
use crate::lattice::{CriteriaVector, LatticeSpec};
use crate::postprocess::{PreferenceFn, PreferenceModel};

pub use bootstrap::{bootstrap_ci, percentile};
pub use kendall::{
    kendall_tau_distance, kendall_tau_from_values, kendall_tau_sampled, KENDALL_EXACT_LIMIT,
    TIE_TOL,
};

/// A mean together with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

/// Mean and standard error of a sample (`se = 0` below two observations).
pub fn mean_and_se(xs: &[f64]) -> Estimate {
    let n = xs.len();
    if n == 0 {
        return Estimate {
            value: f64::NAN,
            se: f64::NAN,
        };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return Estimate { value: mean, se: 0.0 };
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Estimate {
        value: mean,
        se: (var / n as f64).sqrt(),
    }
}

/// Mean squared error on `test`, with the standard error of the squared residuals.
pub fn prediction_error(model: &impl PreferenceFn, test: &Dataset) -> Estimate {
    let sq: Vec<f64> = test
        .records()
        .iter()
        .map(|r| (model.value(r.x()) - r.y()).powi(2))
        .collect();
    mean_and_se(&sq)
}

/// Smallest mean squared error any isotonic function attains on `ds`.
///
/// The minimizer is constant on records sharing an input, so the error splits
/// into the within-point spread plus the weighted isotonic fit of point means.
pub fn irreducible_error(ds: &Dataset) -> Result<f64> {
    let s = ds.summarize();
    let wt = WeightedTargets::new(s.means(), s.counts())?;
    let fit = isotonic_fit(s.dag().graph(), &wt)?;
    let pooled = wt.objective(fit.values());
    Ok(((pooled + s.within_ss()) / ds.len() as f64).max(0.0))
}

/// Prediction error minus irreducible error; the standard error is the
/// prediction error's, used as an upper bound.
pub fn reducible_error(model: &impl PreferenceFn, test: &Dataset) -> Result<Estimate> {
    let pred = prediction_error(model, test);
    Ok(Estimate {
        value: pred.value - irreducible_error(test)?,
        se: pred.se,
    })
}

/// Summary of a model's fit to held-out data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub prediction_error: f64,
    pub prediction_error_se: f64,
    pub irreducible_error: f64,
    pub reducible_error: f64,
    pub reducible_error_se: f64,
    pub n_test: usize,
}

pub fn metric_report(model: &impl PreferenceFn, test: &Dataset) -> Result<MetricReport> {
    let pred = prediction_error(model, test);
    let irreducible = irreducible_error(test)?;
    Ok(MetricReport {
        prediction_error: pred.value,
        prediction_error_se: pred.se,
        irreducible_error: irreducible,
        reducible_error: pred.value - irreducible,
        reducible_error_se: pred.se,
        n_test: test.len(),
    })
}

/// A probability distribution over lattice points.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    support: Vec<CriteriaVector>,
    probabilities: Vec<f64>,
    /// Number of records behind an empirical distribution, if any.
    n_samples: Option<usize>,
}

impl EmpiricalDistribution {
    pub fn new(support: Vec<CriteriaVector>, probabilities: Vec<f64>) -> Result<Self> {
        if support.is_empty() || support.len() != probabilities.len() {
            return Err(Error::InvalidInput(format!(
                "{} support points with {} probabilities",
                support.len(),
                probabilities.len()
            )));
        }
        if probabilities.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidInput("negative or non-finite probability".into()));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self {
            support,
            probabilities,
            n_samples: None,
        })
    }

    /// Uniform over every lattice point.
    pub fn uniform(spec: &LatticeSpec) -> Result<Self> {
        if spec.size() > 1 << 24 {
            return Err(Error::TooLarge(format!(
                "uniform distribution over {} points",
                spec.size()
            )));
        }
        let n = spec.size() as usize;
        Ok(Self {
            support: spec.points().collect(),
            probabilities: vec![1.0 / n as f64; n],
            n_samples: None,
        })
    }

    /// Relative frequencies of the inputs of `ds`.
    pub fn from_dataset(ds: &Dataset) -> Self {
        let s = ds.summarize();
        Self {
            support: s.inputs(),
            probabilities: s.frequencies(),
            n_samples: Some(ds.len()),
        }
    }

    pub fn support(&self) -> &[CriteriaVector] {
        &self.support
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn n_samples(&self) -> Option<usize> {
        self.n_samples
    }

    /// Expectation of `h` together with its standard error when the
    /// distribution comes from a sample.
    fn expect(&self, h: impl Fn(&CriteriaVector) -> f64) -> WeightedMean {
        let vals: Vec<f64> = self.support.iter().map(h).collect();
        let mean: f64 = vals.iter().zip(&self.probabilities).map(|(v, p)| v * p).sum();
        let se = self.n_samples.map(|n| {
            if n < 2 {
                return 0.0;
            }
            let var: f64 = vals
                .iter()
                .zip(&self.probabilities)
                .map(|(v, p)| p * (v - mean).powi(2))
                .sum::<f64>()
                * n as f64
                / (n - 1) as f64;
            (var / n as f64).sqrt()
        });
        WeightedMean { value: mean, se }
    }
}

/// An expectation under a distribution, with a standard error when the
/// distribution is a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedMean {
    pub value: f64,
    pub se: Option<f64>,
}

/// `Σ_x P(x) (truth(x) − model(x))²`.
pub fn estimation_error(
    model: &impl PreferenceFn,
    truth: &impl PreferenceFn,
    p: &EmpiricalDistribution,
) -> f64 {
    p.expect(|x| (truth.value(x) - model.value(x)).powi(2)).value
}

/// `Σ_x P(x) (fa(x) − fb(x))²` for two models on one lattice.
pub fn preference_misalignment(
    fa: &PreferenceModel,
    fb: &PreferenceModel,
    p: &EmpiricalDistribution,
) -> Result<WeightedMean> {
    if fa.spec() != fb.spec() {
        return Err(Error::InvalidInput("models live on different lattices".into()));
    }
    for x in p.support() {
        fa.spec().check(x)?;
    }
    Ok(p.expect(|x| (fa.value(x) - fb.value(x)).powi(2)))
}

/// One point of a criteria-effect curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub level: u32,
    pub value: f64,
    /// 95% half-width on the square-root error scale; absent when the
    /// reducible error is not positive.
    pub halfwidth: Option<f64>,
}

/// Half-width `1.96 · se / (2 √reducible)`, the delta-method interval for
/// the root of the reducible error.
pub fn effect_halfwidth(prediction_se: f64, reducible: f64) -> Option<f64> {
    (reducible > 0.0).then(|| 1.96 * prediction_se / (2.0 * reducible.sqrt()))
}

/// Model values as criterion `vary` sweeps `1..=m` with the others held at
/// `fixed_levels` (given in criterion order, skipping `vary`).
pub fn criteria_effect_curve(
    model: &PreferenceModel,
    vary: usize,
    fixed_levels: &[u32],
    report: &MetricReport,
) -> Result<Vec<CurvePoint>> {
    let spec = model.spec();
    if vary >= spec.d() {
        return Err(Error::InvalidInput(format!(
            "criterion {vary} out of range for {} criteria",
            spec.d()
        )));
    }
    if fixed_levels.len() + 1 != spec.d() {
        return Err(Error::DimensionMismatch {
            expected: spec.d() - 1,
            got: fixed_levels.len(),
        });
    }
    let halfwidth = effect_halfwidth(report.prediction_error_se, report.reducible_error);
    (1..=spec.m())
        .map(|level| {
            let mut coords = fixed_levels.to_vec();
            coords.insert(vary, level);
            let x = spec.point(coords)?;
            Ok(CurvePoint {
                level,
                value: model.value(&x),
                halfwidth,
            })
        })
        .collect()
}
