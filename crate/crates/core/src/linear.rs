//! Linear functions with non-negative slopes and their least-squares fit.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::CriteriaVector;
use crate::lsq::bounded_lsq;

/// `g(x) = a·x + b` with `a >= 0` and a free intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    a: Vec<f64>,
    b: f64,
}

impl LinearModel {
    pub fn new(a: Vec<f64>, b: f64) -> Result<Self> {
        if let Some(i) = a.iter().position(|&ai| !(ai >= 0.0 && ai.is_finite())) {
            return Err(Error::InvalidInput(format!(
                "slope {} for criterion {i} is negative or not finite",
                a[i]
            )));
        }
        if !b.is_finite() {
            return Err(Error::InvalidInput("intercept is not finite".into()));
        }
        Ok(Self { a, b })
    }

    pub fn slopes(&self) -> &[f64] {
        &self.a
    }

    pub fn intercept(&self) -> f64 {
        self.b
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    /// Unclamped value at `x`.
    pub fn value(&self, x: &CriteriaVector) -> f64 {
        self.value_at(x.coords())
    }

    pub(crate) fn value_at(&self, coords: &[u32]) -> f64 {
        self.a
            .iter()
            .zip(coords)
            .map(|(a, &c)| a * f64::from(c))
            .sum::<f64>()
            + self.b
    }
}

/// Minimizes `Σ_u w_u (a·x_u + b − t_u)²` over `a >= 0` and free `b`.
///
/// Inputs are centered at their weighted mean before solving so the intercept
/// column is orthogonal to the slope columns.
pub fn nnls_fit(points: &[CriteriaVector], weights: &[f64], targets: &[f64]) -> Result<LinearModel> {
    let n = points.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if weights.len() != n || targets.len() != n {
        return Err(Error::InvalidInput(format!(
            "{n} points, {} weights, {} targets",
            weights.len(),
            targets.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
        return Err(Error::InvalidInput(format!("weight {w} is not strictly positive")));
    }
    let d = points[0].len();
    if let Some(p) = points.iter().find(|p| p.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: p.len(),
        });
    }
    let total: f64 = weights.iter().sum();
    let center: Vec<f64> = (0..d)
        .map(|i| {
            points
                .iter()
                .zip(weights)
                .map(|(p, w)| w * f64::from(p.coords()[i]))
                .sum::<f64>()
                / total
        })
        .collect();

    let mut design = DMatrix::zeros(n, d + 1);
    let mut rhs = DVector::zeros(n);
    for (row, ((p, &w), &t)) in points.iter().zip(weights).zip(targets).enumerate() {
        let sw = w.sqrt();
        for i in 0..d {
            design[(row, i)] = sw * (f64::from(p.coords()[i]) - center[i]);
        }
        design[(row, d)] = sw;
        rhs[row] = sw * t;
    }
    let mut nonneg = vec![true; d + 1];
    nonneg[d] = false;
    let z = bounded_lsq(&design, &rhs, &nonneg);
    let a: Vec<f64> = z.iter().take(d).map(|&v| v.max(0.0)).collect();
    let b = z[d] - a.iter().zip(&center).map(|(a, c)| a * c).sum::<f64>();
    LinearModel::new(a, b)
}
