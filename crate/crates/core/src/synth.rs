//! Synthetic preference data from classical utility families, and the
//! benchmark comparing the cross-validated estimator with plain NNLS.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cv::{cross_validate, LambdaGrid};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::lattice::{CriteriaVector, LatticeSpec};
use crate::metrics::{estimation_error, mean_and_se, EmpiricalDistribution};
use crate::postprocess::{post_process, PreferenceFn};
use crate::rls::{rls_solve, Lambda};
use crate::rng::{derive_seed, rng_from};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UtilityFamily {
    /// Perfect substitutes: a weighted sum.
    Linear,
    /// Perfect complements: the smallest weighted score.
    Leontief,
    /// A product of powers.
    CobbDouglas,
}

impl UtilityFamily {
    pub const ALL: [UtilityFamily; 3] = [
        UtilityFamily::Linear,
        UtilityFamily::Leontief,
        UtilityFamily::CobbDouglas,
    ];

    fn tag(self) -> u64 {
        match self {
            UtilityFamily::Linear => 1,
            UtilityFamily::Leontief => 2,
            UtilityFamily::CobbDouglas => 3,
        }
    }
}

impl fmt::Display for UtilityFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UtilityFamily::Linear => "linear",
            UtilityFamily::Leontief => "leontief",
            UtilityFamily::CobbDouglas => "cobb_douglas",
        })
    }
}

impl FromStr for UtilityFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "linear" => Ok(UtilityFamily::Linear),
            "leontief" => Ok(UtilityFamily::Leontief),
            "cobb_douglas" | "cobbdouglas" => Ok(UtilityFamily::CobbDouglas),
            other => Err(Error::InvalidInput(format!("unknown utility family '{other}'"))),
        }
    }
}

/// A utility function normalized so that its maximum on the lattice is 1.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilitySpec {
    family: UtilityFamily,
    a: Vec<f64>,
    spec: LatticeSpec,
}

impl UtilitySpec {
    pub fn new(family: UtilityFamily, a: Vec<f64>, spec: LatticeSpec) -> Result<Self> {
        if a.len() != spec.d() {
            return Err(Error::DimensionMismatch {
                expected: spec.d(),
                got: a.len(),
            });
        }
        if a.iter().any(|ai| !(ai.is_finite() && *ai > 0.0)) {
            return Err(Error::InvalidInput("utility weights must be positive".into()));
        }
        Ok(Self { family, a, spec })
    }

    /// Weights drawn uniformly from `[1, 2]^d`.
    pub fn random(family: UtilityFamily, spec: LatticeSpec, rng: &mut impl Rng) -> Self {
        let a = (0..spec.d()).map(|_| rng.random_range(1.0..=2.0)).collect();
        Self { family, a, spec }
    }

    pub fn family(&self) -> UtilityFamily {
        self.family
    }

    pub fn weights(&self) -> &[f64] {
        &self.a
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn eval(&self, x: &CriteriaVector) -> f64 {
        let m = f64::from(self.spec.m());
        let xs = x.coords().iter().map(|&c| f64::from(c));
        let l1: f64 = self.a.iter().sum();
        match self.family {
            UtilityFamily::Linear => xs.zip(&self.a).map(|(x, a)| a * x).sum::<f64>() / (m * l1),
            UtilityFamily::Leontief => {
                let min_a = self.a.iter().copied().fold(f64::INFINITY, f64::min);
                xs.zip(&self.a).map(|(x, a)| a * x).fold(f64::INFINITY, f64::min) / (m * min_a)
            }
            UtilityFamily::CobbDouglas => {
                xs.zip(&self.a).map(|(x, a)| (x / m).powf(*a)).product()
            }
        }
    }
}

impl PreferenceFn for UtilitySpec {
    fn value(&self, x: &CriteriaVector) -> f64 {
        self.eval(x)
    }
}

/// A sampled dataset and the noiseless utility of each record.
#[derive(Debug, Clone)]
pub struct SyntheticSample {
    pub dataset: Dataset,
    pub truth: Vec<f64>,
}

/// Uniform inputs on the lattice with `y = u(x) + N(0, σ²)`, left unclamped.
pub fn sample_dataset(u: &UtilitySpec, n: usize, sigma: f64, seed: u64) -> Result<SyntheticSample> {
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let noise = Normal::new(0.0, sigma)
        .map_err(|_| Error::InvalidInput(format!("invalid noise level {sigma}")))?;
    let mut rng = rng_from(seed);
    let size = u.spec.size();
    let mut rows = Vec::with_capacity(n);
    let mut truth = Vec::with_capacity(n);
    for _ in 0..n {
        let x = u.spec.point_at(rng.random_range(0..size));
        let t = u.eval(&x);
        let y = t + noise.sample(&mut rng);
        truth.push(t);
        rows.push((x, y));
    }
    Ok(SyntheticSample {
        dataset: Dataset::from_unit(u.spec, rows)?,
        truth,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub d: usize,
    pub m: u32,
    pub sigma: f64,
    pub sample_sizes: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub grid: LambdaGrid,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            d: 2,
            m: 5,
            sigma: 0.2,
            sample_sizes: vec![50, 100, 200, 300, 400, 500, 600, 700, 800, 1000],
            trials: 50,
            seed: 0,
            grid: LambdaGrid::default(),
        }
    }
}

impl ExperimentConfig {
    fn validate(&self) -> Result<LatticeSpec> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidInput(format!("noise level {} is invalid", self.sigma)));
        }
        if self.trials == 0 {
            return Err(Error::InvalidInput("need at least one trial".into()));
        }
        if let Some(&n) = self.sample_sizes.iter().find(|&&n| n < 2) {
            return Err(Error::TooFewRecords { needed: 2, got: n });
        }
        LatticeSpec::unit(self.d, self.m)
    }
}

/// Estimation errors of one trial under the uniform distribution on the lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialErrors {
    /// Linear fit on all records.
    pub nnls: f64,
    /// Cross-validated model refit on all records.
    pub cv: f64,
    /// Cross-validated model before the refit, trained on the selection split.
    pub cv_pre_refit: f64,
    /// Linear fit on the selection split's training part.
    pub nnls_train_split: f64,
    pub chosen_lambda: Lambda,
}

/// Runs one independent trial; the outcome depends only on the arguments.
pub fn run_trial(cfg: &ExperimentConfig, family: UtilityFamily, n: usize, trial: usize) -> Result<TrialErrors> {
    let spec = cfg.validate()?;
    let base = derive_seed(cfg.seed, &[family.tag(), n as u64, trial as u64]);
    let utility = UtilitySpec::random(family, spec, &mut rng_from(derive_seed(base, &[0])));
    let sample = sample_dataset(&utility, n, cfg.sigma, derive_seed(base, &[1]))?;
    let ds = &sample.dataset;
    let p = EmpiricalDistribution::uniform(&spec)?;

    let nnls = post_process(&rls_solve(ds, Lambda::Infinity)?, &spec)?;
    let cv_seed = derive_seed(base, &[2]);
    let cv = cross_validate(ds, &cfg.grid, cv_seed)?;
    let (train, _) = crate::cv::split(ds, cv_seed)?;
    let nnls_train = post_process(&rls_solve(&train, Lambda::Infinity)?, &spec)?;
    Ok(TrialErrors {
        nnls: estimation_error(&nnls, &utility, &p),
        cv: estimation_error(&cv.final_model, &utility, &p),
        cv_pre_refit: estimation_error(&cv.pre_refit_model, &utility, &p),
        nnls_train_split: estimation_error(&nnls_train, &utility, &p),
        chosen_lambda: cv.chosen_lambda,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Nnls,
    Cv,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Nnls => "nnls",
            Method::Cv => "cv",
        })
    }
}

/// Mean estimation error of one method at one sample size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub family: UtilityFamily,
    #[serde(rename = "N")]
    pub n: usize,
    pub method: Method,
    pub mean_error: f64,
    pub se: f64,
    pub trials: usize,
}

/// All trials for every sample size; rows ordered by size, then method.
pub fn run_experiment(cfg: &ExperimentConfig, family: UtilityFamily) -> Result<Vec<ExperimentRow>> {
    cfg.validate()?;
    let jobs: Vec<(usize, usize)> = cfg
        .sample_sizes
        .iter()
        .flat_map(|&n| (0..cfg.trials).map(move |t| (n, t)))
        .collect();
    let outcomes = jobs
        .par_iter()
        .map(|&(n, t)| run_trial(cfg, family, n, t))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(2 * cfg.sample_sizes.len());
    for (k, &n) in cfg.sample_sizes.iter().enumerate() {
        let chunk = &outcomes[k * cfg.trials..(k + 1) * cfg.trials];
        for method in [Method::Nnls, Method::Cv] {
            let errs: Vec<f64> = chunk
                .iter()
                .map(|o| match method {
                    Method::Nnls => o.nnls,
                    Method::Cv => o.cv,
                })
                .collect();
            let est = mean_and_se(&errs);
            rows.push(ExperimentRow {
                family,
                n,
                method,
                mean_error: est.value,
                se: est.se,
                trials: cfg.trials,
            });
        }
    }
    Ok(rows)
}

/// Writes rows as CSV with columns `family,N,method,mean_error,se,trials`.
pub fn write_experiment_csv<W: std::io::Write>(rows: &[ExperimentRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
