//! Regularized least squares: an isotonic function pulled toward its best
//! non-negative-slope linear approximation on the observed inputs.
//!
//! For a dataset with unique inputs `u`, frequencies `p_u = n_u / N`, point
//! means `ȳ_u` and `K` unique inputs, the objective is
//!
//! ```text
//! J(f, g) = (1/N) Σ_j (f(x_j) − y_j)² + (λ/K) Σ_u (f_u − g(u))²
//! ```
//!
//! minimized over isotonic `f` and linear `g` with non-negative slopes.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dag::{ConstraintGraph, IsotonicAssignment};
use crate::dataset::{Dataset, Summary};
use crate::error::{Error, Result};
use crate::isotonic::{isotonic_fit, WeightedTargets};
use crate::lattice::CriteriaVector;
use crate::linear::{nnls_fit, LinearModel};
use crate::lsq::bounded_lsq;

/// Regularization strength; `Infinity` selects plain non-negative least squares.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lambda {
    Finite(f64),
    Infinity,
}

impl Lambda {
    pub fn finite(value: f64) -> Result<Self> {
        if !(value.is_finite() && value >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "regularization {value} is not a non-negative finite number"
            )));
        }
        Ok(Lambda::Finite(value))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Lambda::Infinity)
    }

    /// Numeric value, with `f64::INFINITY` for the sentinel.
    pub fn as_f64(&self) -> f64 {
        match *self {
            Lambda::Finite(v) => v,
            Lambda::Infinity => f64::INFINITY,
        }
    }
}

impl fmt::Display for Lambda {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lambda::Finite(v) => write!(f, "{v}"),
            Lambda::Infinity => write!(f, "inf"),
        }
    }
}

impl FromStr for Lambda {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") || s == "∞" {
            return Ok(Lambda::Infinity);
        }
        let v: f64 = s
            .parse()
            .map_err(|_| Error::InvalidInput(format!("cannot parse regularization '{s}'")))?;
        Lambda::finite(v)
    }
}

impl Serialize for Lambda {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            Lambda::Finite(v) => serializer.serialize_f64(v),
            Lambda::Infinity => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Lambda {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Number(v) => Lambda::finite(v).map_err(serde::de::Error::custom),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Starting point of the alternating solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Init {
    /// Isotonic fit of the point means, then its best linear approximation.
    #[default]
    Isotonic,
    /// Least-squares linear fit of the data, then the matching isotonic step.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RlsOptions {
    pub max_iter: usize,
    /// Stop once an iteration lowers the objective by less than this.
    pub tol: f64,
    pub init: Init,
}

impl Default for RlsOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol: 1e-13,
            init: Init::Isotonic,
        }
    }
}

/// A fitted pair `(f, g)` on the unique inputs of a training set.
#[derive(Debug, Clone, PartialEq)]
pub struct RlsSolution {
    pub lambda: Lambda,
    pub points: Vec<CriteriaVector>,
    pub f_values: IsotonicAssignment,
    pub g: LinearModel,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
}

impl RlsSolution {
    /// Objective at the returned pair.
    pub fn objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace is never empty")
    }

    /// `(1/K) Σ_u (f_u − g(u))²`.
    pub fn penalty(&self) -> f64 {
        let k = self.points.len() as f64;
        self.points
            .iter()
            .zip(self.f_values.values())
            .map(|(x, f)| (f - self.g.value(x)).powi(2))
            .sum::<f64>()
            / k
    }
}

pub fn rls_solve(ds: &Dataset, lambda: Lambda) -> Result<RlsSolution> {
    rls_solve_with(ds, lambda, &RlsOptions::default())
}

pub fn rls_solve_with(ds: &Dataset, lambda: Lambda, opts: &RlsOptions) -> Result<RlsSolution> {
    if let Lambda::Finite(v) = lambda {
        Lambda::finite(v)?;
    }
    let summary = ds.summarize();
    let problem = Problem::new(&summary, lambda);
    let points = summary.inputs();
    match lambda {
        Lambda::Finite(v) if v == 0.0 => {
            let f = problem.f_step(None)?;
            let g = problem.g_step(&f)?;
            let objective = problem.data_term(&f);
            Ok(RlsSolution {
                lambda,
                points,
                f_values: IsotonicAssignment::new(f),
                g,
                objective_trace: vec![objective],
                iterations: 0,
            })
        }
        Lambda::Infinity => {
            let g = nnls_fit(&problem.x, &problem.p, &problem.ybar)?;
            let f: Vec<f64> = problem.x.iter().map(|x| g.value(x)).collect();
            let objective = problem.data_term(&f);
            Ok(RlsSolution {
                lambda,
                points,
                f_values: IsotonicAssignment::new(f),
                g,
                objective_trace: vec![objective],
                iterations: 0,
            })
        }
        Lambda::Finite(_) => problem.alternate(lambda, points, opts),
    }
}

struct Problem<'a> {
    graph: &'a ConstraintGraph,
    x: Vec<CriteriaVector>,
    p: Vec<f64>,
    ybar: Vec<f64>,
    within: f64,
    /// `λ / K`, zero at both endpoints.
    c: f64,
}

impl<'a> Problem<'a> {
    fn new(summary: &'a Summary, lambda: Lambda) -> Self {
        let c = match lambda {
            Lambda::Finite(v) => v / summary.len() as f64,
            Lambda::Infinity => 0.0,
        };
        Self {
            graph: summary.dag().graph(),
            x: summary.inputs(),
            p: summary.frequencies(),
            ybar: summary.means(),
            within: summary.within_ss() / summary.n_records() as f64,
            c,
        }
    }

    fn data_term(&self, f: &[f64]) -> f64 {
        f.iter()
            .zip(&self.p)
            .zip(&self.ybar)
            .map(|((f, p), y)| p * (f - y) * (f - y))
            .sum::<f64>()
            + self.within
    }

    fn objective(&self, f: &[f64], g: &LinearModel) -> f64 {
        let penalty: f64 = f
            .iter()
            .zip(&self.x)
            .map(|(f, x)| (f - g.value(x)).powi(2))
            .sum();
        self.data_term(f) + self.c * penalty
    }

    /// Exact minimizer over isotonic `f` for a fixed `g` (or for the data term alone).
    fn f_step(&self, g: Option<&LinearModel>) -> Result<Vec<f64>> {
        let (weights, targets): (Vec<f64>, Vec<f64>) = match g {
            None => (self.p.clone(), self.ybar.clone()),
            Some(g) => self
                .x
                .iter()
                .zip(&self.p)
                .zip(&self.ybar)
                .map(|((x, &p), &y)| {
                    let w = p + self.c;
                    (w, (p * y + self.c * g.value(x)) / w)
                })
                .unzip(),
        };
        let wt = WeightedTargets::new(targets, weights)?;
        Ok(isotonic_fit(self.graph, &wt)?.into_values())
    }

    /// Exact minimizer over `g` for a fixed `f`; the penalty weighs inputs equally.
    fn g_step(&self, f: &[f64]) -> Result<LinearModel> {
        nnls_fit(&self.x, &vec![1.0; f.len()], f)
    }

    /// Minimizes the objective over `g` while the level sets of `f` stay fixed.
    ///
    /// On a fixed partition each pooled value of the `f`-step is affine in the
    /// coefficients of `g`, so the objective is a quadratic in them and one
    /// bounded least-squares solve finds its minimum.
    fn partition_step(&self, f: &[f64]) -> Option<LinearModel> {
        let k = f.len();
        let d = self.x[0].len();
        let blocks = level_sets(self.graph, f);
        let center: Vec<f64> = (0..d)
            .map(|i| self.x.iter().map(|x| f64::from(x.coords()[i])).sum::<f64>() / k as f64)
            .collect();
        let feature = |u: usize| -> Vec<f64> {
            let mut row: Vec<f64> = (0..d)
                .map(|i| f64::from(self.x[u].coords()[i]) - center[i])
                .collect();
            row.push(1.0);
            row
        };
        let c = self.c;
        let sc = c.sqrt();
        let mut design = DMatrix::zeros(2 * k, d + 1);
        let mut rhs = DVector::zeros(2 * k);
        let mut row = 0;
        for block in &blocks {
            let weight: f64 = block.iter().map(|&u| self.p[u] + c).sum();
            let alpha = block.iter().map(|&u| self.p[u] * self.ybar[u]).sum::<f64>() / weight;
            let mut s = vec![0.0; d + 1];
            for &u in block {
                for (si, fi) in s.iter_mut().zip(feature(u)) {
                    *si += fi;
                }
            }
            let slope: Vec<f64> = s.iter().map(|si| c * si / weight).collect();
            for &u in block {
                let sp = self.p[u].sqrt();
                let xu = feature(u);
                for j in 0..=d {
                    design[(row, j)] = sp * slope[j];
                    design[(row + 1, j)] = sc * (slope[j] - xu[j]);
                }
                rhs[row] = sp * (self.ybar[u] - alpha);
                rhs[row + 1] = -sc * alpha;
                row += 2;
            }
        }
        let mut nonneg = vec![true; d + 1];
        nonneg[d] = false;
        let theta = bounded_lsq(&design, &rhs, &nonneg);
        if theta.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let a: Vec<f64> = theta.iter().take(d).map(|v| v.max(0.0)).collect();
        let b = theta[d] - a.iter().zip(&center).map(|(a, c)| a * c).sum::<f64>();
        LinearModel::new(a, b).ok()
    }

    fn alternate(&self, lambda: Lambda, points: Vec<CriteriaVector>, opts: &RlsOptions) -> Result<RlsSolution> {
        let (mut f, mut g) = match opts.init {
            Init::Isotonic => {
                let f = self.f_step(None)?;
                let g = self.g_step(&f)?;
                (f, g)
            }
            Init::Linear => {
                let g = nnls_fit(&self.x, &self.p, &self.ybar)?;
                (self.f_step(Some(&g))?, g)
            }
        };
        let mut current = self.objective(&f, &g);
        let mut trace = vec![current];
        let mut iterations = 0;
        for it in 1..=opts.max_iter {
            let g_alt = self.g_step(&f)?;
            let f_alt = self.f_step(Some(&g_alt))?;
            let mut best = (self.objective(&f_alt, &g_alt), f_alt, g_alt);
            if let Some(g_part) = self.partition_step(&f) {
                let f_part = self.f_step(Some(&g_part))?;
                let j = self.objective(&f_part, &g_part);
                if j < best.0 {
                    best = (j, f_part, g_part);
                }
            }
            if best.0 > current {
                break;
            }
            let decrease = current - best.0;
            (current, f, g) = best;
            trace.push(current);
            iterations = it;
            if decrease < opts.tol {
                break;
            }
        }
        Ok(RlsSolution {
            lambda,
            points,
            f_values: IsotonicAssignment::new(f),
            g,
            objective_trace: trace,
            iterations,
        })
    }
}

/// Connected groups of nodes joined by edges whose endpoints share a value.
fn level_sets(graph: &ConstraintGraph, f: &[f64]) -> Vec<Vec<usize>> {
    let n = f.len();
    let scale = f.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-12 * scale;
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(u, v) in graph.edges() {
        if (f[u] - f[v]).abs() <= tol {
            let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
            if ru != rv {
                parent[ru.max(rv)] = ru.min(rv);
            }
        }
    }
    let mut index = vec![usize::MAX; n];
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for u in 0..n {
        let r = find(&mut parent, u);
        if index[r] == usize::MAX {
            index[r] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[index[r]].push(u);
    }
    blocks
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeSpec;
    use rand::{Rng, SeedableRng};

    fn v(c: &[u32]) -> CriteriaVector {
        CriteriaVector::new(c.to_vec())
    }

    fn random_dataset(seed: u64, d: usize, m: u32, n: usize) -> Dataset {
        let spec = LatticeSpec::unit(d, m).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let rows = (0..n)
            .map(|_| {
                let x: Vec<u32> = (0..d).map(|_| rng.random_range(1..=m)).collect();
                let min = *x.iter().min().unwrap() as f64 / m as f64;
                (CriteriaVector::new(x), min + rng.random_range(-0.3..0.3))
            })
            .collect();
        Dataset::from_unit(spec, rows).unwrap()
    }

    /// Objective evaluated record by record.
    fn raw_objective(ds: &Dataset, sol: &RlsSolution) -> f64 {
        let lookup = |x: &CriteriaVector| {
            let i = sol.points.iter().position(|p| p == x).unwrap();
            sol.f_values.values()[i]
        };
        let n = ds.len() as f64;
        let data: f64 = ds
            .records()
            .iter()
            .map(|r| (lookup(r.x()) - r.y()).powi(2))
            .sum::<f64>()
            / n;
        match sol.lambda {
            Lambda::Finite(l) => data + l * sol.penalty(),
            Lambda::Infinity => data,
        }
    }

    #[test]
    fn lambda_parsing() {
        assert_eq!("inf".parse::<Lambda>().unwrap(), Lambda::Infinity);
        assert_eq!("0.25".parse::<Lambda>().unwrap(), Lambda::Finite(0.25));
        assert!("-1".parse::<Lambda>().is_err());
        assert!("nan".parse::<Lambda>().is_err());
        assert!(Lambda::finite(f64::INFINITY).is_err());
        let json = serde_json::to_string(&[Lambda::Finite(0.5), Lambda::Infinity]).unwrap();
        assert_eq!(json, r#"[0.5,"inf"]"#);
        let back: Vec<Lambda> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, vec![Lambda::Finite(0.5), Lambda::Infinity]);
    }

    #[test]
    fn zero_lambda_on_consistent_data_interpolates() {
        let spec = LatticeSpec::unit(2, 4).unwrap();
        let ds = Dataset::from_unit(
            spec,
            vec![(v(&[1, 1]), 0.1), (v(&[2, 1]), 0.3), (v(&[2, 3]), 0.35), (v(&[4, 4]), 0.9)],
        )
        .unwrap();
        let sol = rls_solve(&ds, Lambda::Finite(0.0)).unwrap();
        assert_eq!(sol.f_values.values(), &[0.1, 0.3, 0.35, 0.9]);
    }

    #[test]
    fn infinite_lambda_recovers_linear_truth() {
        let spec = LatticeSpec::unit(2, 4).unwrap();
        let rows = spec
            .points()
            .map(|x| {
                let y = 0.1 * f64::from(x.coords()[0]) + 0.05 * f64::from(x.coords()[1]) - 0.1;
                (x, y)
            })
            .collect();
        let ds = Dataset::from_unit(spec, rows).unwrap();
        let sol = rls_solve(&ds, Lambda::Infinity).unwrap();
        assert!((sol.g.slopes()[0] - 0.1).abs() < 1e-9);
        assert!((sol.g.slopes()[1] - 0.05).abs() < 1e-9);
        assert!((sol.g.intercept() + 0.1).abs() < 1e-9);
        assert!(sol.penalty() < 1e-18);
    }

    #[test]
    fn endpoints_match_direct_fits() {
        let ds = random_dataset(3, 2, 4, 60);
        let s = ds.summarize();
        let zero = rls_solve(&ds, Lambda::Finite(0.0)).unwrap();
        let direct = isotonic_fit(
            s.dag().graph(),
            &WeightedTargets::new(s.means(), s.frequencies()).unwrap(),
        )
        .unwrap();
        for (a, b) in zero.f_values.values().iter().zip(direct.values()) {
            assert!((a - b).abs() <= 1e-9);
        }
        let inf = rls_solve(&ds, Lambda::Infinity).unwrap();
        let records: Vec<CriteriaVector> = ds.records().iter().map(|r| r.x().clone()).collect();
        let ys: Vec<f64> = ds.records().iter().map(|r| r.y()).collect();
        let raw = nnls_fit(&records, &vec![1.0; ys.len()], &ys).unwrap();
        for (a, b) in inf.g.slopes().iter().zip(raw.slopes()) {
            assert!((a - b).abs() <= 1e-9);
        }
        assert!((inf.g.intercept() - raw.intercept()).abs() <= 1e-9);
    }

    #[test]
    fn objective_matches_record_level_evaluation() {
        for seed in 0..10 {
            let ds = random_dataset(seed, 2, 4, 40);
            for lambda in [0.0, 0.01, 0.5, 4.0, 256.0] {
                let sol = rls_solve(&ds, Lambda::Finite(lambda)).unwrap();
                assert!((sol.objective() - raw_objective(&ds, &sol)).abs() <= 1e-9);
                for w in sol.objective_trace.windows(2) {
                    assert!(w[1] <= w[0] + 1e-10);
                }
            }
            let sol = rls_solve(&ds, Lambda::Infinity).unwrap();
            assert!((sol.objective() - raw_objective(&ds, &sol)).abs() <= 1e-9);
        }
    }

    #[test]
    fn penalty_shrinks_along_the_grid() {
        for seed in 0..5 {
            let ds = random_dataset(100 + seed, 2, 5, 80);
            let mut previous = f64::INFINITY;
            let mut grid = vec![0.0];
            grid.extend((-9..=8).map(|k| 2f64.powi(k)));
            for lambda in grid {
                let p = rls_solve(&ds, Lambda::Finite(lambda)).unwrap().penalty();
                assert!(p <= previous + 1e-9, "penalty {p} after {previous} at {lambda}");
                previous = p;
            }
            assert!(rls_solve(&ds, Lambda::Infinity).unwrap().penalty() <= previous + 1e-9);
        }
    }

    #[test]
    fn initialization_does_not_matter() {
        for seed in 0..10 {
            let ds = random_dataset(200 + seed, 3, 3, 50);
            for lambda in [0.03, 1.0, 30.0] {
                let a = rls_solve(&ds, Lambda::Finite(lambda)).unwrap();
                let opts = RlsOptions {
                    init: Init::Linear,
                    ..RlsOptions::default()
                };
                let b = rls_solve_with(&ds, Lambda::Finite(lambda), &opts).unwrap();
                assert!((a.objective() - b.objective()).abs() <= 1e-6);
            }
        }
    }

    /// Plain block-coordinate descent run for a long time from random starts.
    #[test]
    fn leontief_instance_matches_long_run_oracle() {
        let spec = LatticeSpec::unit(2, 3).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let rows: Vec<_> = (0..30)
            .map(|_| {
                let x = vec![rng.random_range(1..=3u32), rng.random_range(1..=3u32)];
                let truth = f64::from(*x.iter().min().unwrap()) / 3.0;
                (CriteriaVector::new(x), truth + rng.random_range(-0.2..0.2))
            })
            .collect();
        let ds = Dataset::from_unit(spec, rows).unwrap();
        let sol = rls_solve(&ds, Lambda::Finite(1.0)).unwrap();

        let summary = ds.summarize();
        let problem = Problem::new(&summary, Lambda::Finite(1.0));
        let mut best = f64::INFINITY;
        for start in 0..10 {
            let k = summary.len();
            let mut f: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..2.0)).collect();
            if start == 0 {
                f = summary.means();
            }
            let mut g = problem.g_step(&f).unwrap();
            for _ in 0..5000 {
                f = problem.f_step(Some(&g)).unwrap();
                g = problem.g_step(&f).unwrap();
            }
            best = best.min(problem.objective(&f, &g));
        }
        assert!((sol.objective() - best).abs() <= 1e-6, "{} vs {best}", sol.objective());
        assert!(sol.objective() <= best + 1e-12);
    }

    #[test]
    fn non_finite_lambda_rejected() {
        let ds = random_dataset(1, 2, 3, 5);
        assert!(rls_solve(&ds, Lambda::Finite(f64::NAN)).is_err());
        assert!(rls_solve(&ds, Lambda::Finite(-1.0)).is_err());
    }
}
