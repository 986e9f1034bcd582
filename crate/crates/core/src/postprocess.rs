//! Turning a fitted solution into a total function on the lattice: values are
//! truncated to `[0, 1]` and unobserved points are filled by the midpoint of
//! the tightest observed bounds above and below.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{compare_unchecked, CriteriaVector, Dominance, LatticeSpec};
use crate::linear::LinearModel;
use crate::rls::{Lambda, RlsSolution};

/// Largest lattice for which the full value table is precomputed.
const DENSE_LIMIT: u64 = 1 << 20;

/// Anything that assigns a score to a lattice point.
pub trait PreferenceFn {
    fn value(&self, x: &CriteriaVector) -> f64;
}

impl<F: Fn(&CriteriaVector) -> f64> PreferenceFn for F {
    fn value(&self, x: &CriteriaVector) -> f64 {
        self(x)
    }
}

impl PreferenceFn for LinearModel {
    fn value(&self, x: &CriteriaVector) -> f64 {
        LinearModel::value(self, x)
    }
}

/// How unobserved points are scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtensionMode {
    Interpolate,
    LinearExtrapolate,
}

/// A fitted preference function defined on the whole lattice.
#[derive(Debug, Clone)]
pub struct PreferenceModel {
    spec: LatticeSpec,
    lambda: Lambda,
    points: Vec<CriteriaVector>,
    values: Vec<f64>,
    mode: ExtensionMode,
    g: Option<LinearModel>,
    trained_min: f64,
    trained_max: f64,
    index: HashMap<u64, usize>,
    dense: Option<Vec<f64>>,
}

/// Truncates the fitted values and picks the extension rule from `λ`.
pub fn post_process(sol: &RlsSolution, spec: &LatticeSpec) -> Result<PreferenceModel> {
    let values = sol
        .f_values
        .values()
        .iter()
        .map(|v| v.clamp(0.0, 1.0))
        .collect();
    let (mode, g) = if sol.lambda.is_infinite() {
        (ExtensionMode::LinearExtrapolate, Some(sol.g.clone()))
    } else {
        (ExtensionMode::Interpolate, None)
    };
    PreferenceModel::from_parts(*spec, sol.lambda, sol.points.clone(), values, mode, g)
}

impl PreferenceModel {
    /// Assembles a model from stored values, which must already lie in `[0, 1]`.
    pub fn from_parts(
        spec: LatticeSpec,
        lambda: Lambda,
        points: Vec<CriteriaVector>,
        values: Vec<f64>,
        mode: ExtensionMode,
        g: Option<LinearModel>,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if points.len() != values.len() {
            return Err(Error::InvalidInput(format!(
                "{} points but {} values",
                points.len(),
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidInput(format!("stored value {v} outside [0, 1]")));
        }
        match (&mode, &g) {
            (ExtensionMode::LinearExtrapolate, None) => {
                return Err(Error::InvalidInput(
                    "linear extrapolation needs a linear model".into(),
                ))
            }
            (ExtensionMode::Interpolate, Some(_)) => {
                return Err(Error::InvalidInput(
                    "interpolating model carries no linear model".into(),
                ))
            }
            (_, Some(g)) if g.dim() != spec.d() => {
                return Err(Error::DimensionMismatch {
                    expected: spec.d(),
                    got: g.dim(),
                })
            }
            _ => {}
        }
        let mut index = HashMap::with_capacity(points.len());
        for (i, p) in points.iter().enumerate() {
            spec.check(p)?;
            if index.insert(spec.index_of(p), i).is_some() {
                return Err(Error::InvalidInput(format!("point {p} stored twice")));
            }
        }
        let trained_min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let trained_max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut model = Self {
            spec,
            lambda,
            points,
            values,
            mode,
            g,
            trained_min,
            trained_max,
            index,
            dense: None,
        };
        if mode == ExtensionMode::Interpolate && spec.size() <= DENSE_LIMIT {
            model.dense = Some(model.dense_table());
        }
        Ok(model)
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn lambda(&self) -> Lambda {
        self.lambda
    }

    pub fn mode(&self) -> ExtensionMode {
        self.mode
    }

    pub fn linear(&self) -> Option<&LinearModel> {
        self.g.as_ref()
    }

    /// Observed unique inputs.
    pub fn points(&self) -> &[CriteriaVector] {
        &self.points
    }

    /// Truncated values at [`points`](Self::points).
    pub fn trained_values(&self) -> &[f64] {
        &self.values
    }

    pub fn trained_min(&self) -> f64 {
        self.trained_min
    }

    pub fn trained_max(&self) -> f64 {
        self.trained_max
    }

    /// Value at the stored point `x`, if it was observed.
    pub fn stored(&self, x: &CriteriaVector) -> Option<f64> {
        self.index
            .get(&self.spec.index_of(x))
            .map(|&i| self.values[i])
    }

    /// Scores a lattice point, rejecting coordinates outside the lattice.
    pub fn evaluate(&self, x: &CriteriaVector) -> Result<f64> {
        self.spec.check(x)?;
        Ok(self.evaluate_unchecked(x))
    }

    fn evaluate_unchecked(&self, x: &CriteriaVector) -> f64 {
        let idx = self.spec.index_of(x);
        if let Some(&i) = self.index.get(&idx) {
            return self.values[i];
        }
        match self.mode {
            ExtensionMode::LinearExtrapolate => self
                .g
                .as_ref()
                .expect("checked at construction")
                .value(x)
                .clamp(0.0, 1.0),
            ExtensionMode::Interpolate => match &self.dense {
                Some(table) => table[idx as usize],
                None => {
                    let (lo, hi) = self.bounds(x);
                    (lo + hi) / 2.0
                }
            },
        }
    }

    /// Largest stored value below `x` and smallest stored value above it,
    /// defaulting to the global extremes.
    fn bounds(&self, x: &CriteriaVector) -> (f64, f64) {
        let mut lo = self.trained_min;
        let mut hi = self.trained_max;
        for (p, &v) in self.points.iter().zip(&self.values) {
            match compare_unchecked(p.coords(), x.coords()) {
                Dominance::Dominated => lo = lo.max(v),
                Dominance::Dominates => hi = hi.min(v),
                _ => {}
            }
        }
        (lo, hi)
    }

    /// Values of every lattice point, via two sweeps of running extremes
    /// along unit steps.
    fn dense_table(&self) -> Vec<f64> {
        let size = self.spec.size() as usize;
        let d = self.spec.d();
        let m = self.spec.m();
        let strides: Vec<usize> = (0..d).map(|i| self.spec.stride(i) as usize).collect();
        let mut stored = vec![f64::NAN; size];
        for (p, &v) in self.points.iter().zip(&self.values) {
            stored[self.spec.index_of(p) as usize] = v;
        }

        let mut up_min = vec![f64::INFINITY; size];
        let mut coords = vec![m; d];
        for idx in (0..size).rev() {
            let mut best = if stored[idx].is_nan() {
                f64::INFINITY
            } else {
                stored[idx]
            };
            for i in 0..d {
                if coords[i] < m {
                    best = best.min(up_min[idx + strides[i]]);
                }
            }
            up_min[idx] = best;
            decrement(&mut coords, m);
        }

        let mut down_max = vec![f64::NEG_INFINITY; size];
        let mut coords = vec![1; d];
        for idx in 0..size {
            let mut best = if stored[idx].is_nan() {
                f64::NEG_INFINITY
            } else {
                stored[idx]
            };
            for i in 0..d {
                if coords[i] > 1 {
                    best = best.max(down_max[idx - strides[i]]);
                }
            }
            down_max[idx] = best;
            increment(&mut coords, m);
        }

        (0..size)
            .map(|idx| {
                if stored[idx].is_nan() {
                    let hi = up_min[idx].min(self.trained_max);
                    let lo = down_max[idx].max(self.trained_min);
                    (lo + hi) / 2.0
                } else {
                    stored[idx]
                }
            })
            .collect()
    }
}

fn increment(coords: &mut [u32], m: u32) {
    for c in coords.iter_mut() {
        if *c < m {
            *c += 1;
            return;
        }
        *c = 1;
    }
}

fn decrement(coords: &mut [u32], m: u32) {
    for c in coords.iter_mut() {
        if *c > 1 {
            *c -= 1;
            return;
        }
        *c = m;
    }
}

impl PreferenceFn for PreferenceModel {
    fn value(&self, x: &CriteriaVector) -> f64 {
        debug_assert!(self.spec.check(x).is_ok());
        self.evaluate_unchecked(x)
    }
}
