//! Isotonic matrices that additive and linear models cannot fit, plus the
//! checks and demonstrations built on them.
//!
//! Matrices are indexed from 1 as `(i, j)`; as a lattice point, row `i` is the
//! score on criterion 0 and column `j` the score on criterion 1.

use std::fmt;

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use serde::Serialize;

use crate::dag::{ConstraintGraph, OrderDag};
use crate::error::{Error, Result};
use crate::isotonic::{isotonic_fit, WeightedTargets};
use crate::lattice::{CriteriaVector, LatticeSpec};
use crate::linear::nnls_fit;
use crate::metrics::kendall_tau_distance;
use crate::postprocess::PreferenceFn;

const B4: [[u32; 4]; 4] = [[1, 2, 6, 12], [3, 5, 7, 12], [4, 8, 11, 12], [9, 10, 12, 12]];
const B3: [[u32; 3]; 3] = [[1, 2, 6], [3, 5, 7], [4, 8, 9]];

/// Which construction produced a matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    B4,
    B3,
    Interactions(u32),
    Ranking(u32),
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::B4 => f.write_str("B4"),
            Provenance::B3 => f.write_str("B3"),
            Provenance::Interactions(m) => write!(f, "M_interactions({m})"),
            Provenance::Ranking(m) => write!(f, "M_ranking({m})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleMatrix {
    provenance: Provenance,
    entries: Vec<Vec<f64>>,
}

impl CounterexampleMatrix {
    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.entries
    }

    /// Entry `(i, j)`, 1-based.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i - 1][j - 1]
    }

    pub fn transpose(&self) -> Self {
        let n = self.size();
        Self {
            provenance: self.provenance,
            entries: (0..n).map(|j| (0..n).map(|i| self.entries[i][j]).collect()).collect(),
        }
    }

    /// Non-decreasing along every row and every column.
    pub fn is_bivariate_isotonic(&self) -> bool {
        let n = self.size();
        (0..n).all(|i| {
            (0..n).all(|j| {
                (i + 1 == n || self.entries[i][j] <= self.entries[i + 1][j])
                    && (j + 1 == n || self.entries[i][j] <= self.entries[i][j + 1])
            })
        })
    }

    /// The two-criterion lattice the matrix is a preference function on.
    pub fn lattice(&self) -> LatticeSpec {
        LatticeSpec::unit(2, self.size() as u32).expect("size at least 2")
    }

    /// All lattice points with their values, in lattice index order.
    pub fn lattice_values(&self) -> (Vec<CriteriaVector>, Vec<f64>) {
        self.lattice().points().map(|x| {
            let v = self.value(&x);
            (x, v)
        }).unzip()
    }
}

impl PreferenceFn for CounterexampleMatrix {
    fn value(&self, x: &CriteriaVector) -> f64 {
        let c = x.coords();
        self.entries[c[0] as usize - 1][c[1] as usize - 1]
    }
}

/// The 4×4 matrix with entries `k/12` satisfying all four interaction chains.
pub fn build_b4() -> CounterexampleMatrix {
    CounterexampleMatrix {
        provenance: Provenance::B4,
        entries: B4.iter().map(|r| r.iter().map(|&k| f64::from(k) / 12.0).collect()).collect(),
    }
}

/// The 3×3 matrix with entries `k/10` whose order no additive model reproduces.
pub fn build_b3() -> CounterexampleMatrix {
    CounterexampleMatrix {
        provenance: Provenance::B3,
        entries: B3.iter().map(|r| r.iter().map(|&k| f64::from(k) / 10.0).collect()).collect(),
    }
}

fn block(i: u32, m: u32, k: u32) -> usize {
    (k * i).div_ceil(m) as usize
}

/// Block-constant `m × m` expansion of `B4`; `m` must be a multiple of 4.
pub fn build_m_interactions(m: u32) -> Result<CounterexampleMatrix> {
    if m == 0 || m % 4 != 0 {
        return Err(Error::InvalidInput(format!("m = {m} is not a positive multiple of 4")));
    }
    let entries = (1..=m)
        .map(|i| {
            (1..=m)
                .map(|j| f64::from(B4[block(i, m, 4) - 1][block(j, m, 4) - 1]) / 12.0)
                .collect()
        })
        .collect();
    Ok(CounterexampleMatrix {
        provenance: Provenance::Interactions(m),
        entries,
    })
}

/// Block expansion of `B3` plus the within-block offset
/// `E_ij = i/(10m) + j/(10m²)`, which makes every entry distinct.
pub fn build_m_ranking(m: u32) -> Result<CounterexampleMatrix> {
    if m == 0 || m % 3 != 0 {
        return Err(Error::InvalidInput(format!("m = {m} is not a positive multiple of 3")));
    }
    let mf = f64::from(m);
    let local = |i: u32| f64::from(i - (m / 3) * (block(i, m, 3) as u32 - 1));
    let entries = (1..=m)
        .map(|i| {
            (1..=m)
                .map(|j| {
                    let b = f64::from(B3[block(i, m, 3) - 1][block(j, m, 3) - 1]) / 10.0;
                    b + local(i) / (10.0 * mf) + local(j) / (10.0 * mf * mf)
                })
                .collect()
        })
        .collect();
    Ok(CounterexampleMatrix {
        provenance: Provenance::Ranking(m),
        entries,
    })
}

/// An isotonic function on `[m]^d` with pairwise distinct values.
#[derive(Debug, Clone, PartialEq)]
pub struct UniqueIsotonicTensor {
    spec: LatticeSpec,
    values: Vec<f64>,
}

impl UniqueIsotonicTensor {
    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    /// Values in lattice index order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl PreferenceFn for UniqueIsotonicTensor {
    fn value(&self, x: &CriteriaVector) -> f64 {
        self.values[self.spec.index_of(x) as usize]
    }
}

/// Entries `Σ_k m^(k−1) i_k / (d m^d)`, distinct by base-`m` uniqueness.
pub fn build_unique_tensor(spec: &LatticeSpec) -> Result<UniqueIsotonicTensor> {
    if spec.size() > 1_000_000 {
        return Err(Error::TooLarge(format!("{} lattice points", spec.size())));
    }
    let m = u64::from(spec.m());
    let scale = spec.d() as f64 * spec.size() as f64;
    let values = spec
        .points()
        .map(|x| {
            let mut weight = 1u64;
            let mut total = 0u64;
            for &c in x.coords() {
                total += weight * u64::from(c);
                weight *= m;
            }
            total as f64 / scale
        })
        .collect();
    Ok(UniqueIsotonicTensor { spec: *spec, values })
}

/// Evaluates the four strict chains no interaction model can satisfy at once:
/// `M12<M21<M31<M22`, `M22<M13<M23<M32`, `M31<M22<M32<M41`, `M23<M32<M42<M33`.
pub fn check_interaction_chains(m: &CounterexampleMatrix) -> Result<[bool; 4]> {
    if m.size() != 4 {
        return Err(Error::InvalidInput(format!("need a 4x4 matrix, got {0}x{0}", m.size())));
    }
    const CHAINS: [[(usize, usize); 4]; 4] = [
        [(1, 2), (2, 1), (3, 1), (2, 2)],
        [(2, 2), (1, 3), (2, 3), (3, 2)],
        [(3, 1), (2, 2), (3, 2), (4, 1)],
        [(2, 3), (3, 2), (4, 2), (3, 3)],
    ];
    Ok(CHAINS.map(|chain| chain.windows(2).all(|w| m.entry(w[0].0, w[0].1) < m.entry(w[1].0, w[1].1))))
}

/// Whether some `a_i + b_j` orders the entries exactly as `matrix` does, with
/// every strict gap at least `margin` and `|a|, |b| ≤ 10⁶`.
///
/// Decided by linear-program feasibility over all pairwise order constraints.
/// Rows may have any common length; tied entries are rejected.
pub fn gam_orderable(matrix: &[Vec<f64>], margin: f64) -> Result<bool> {
    let rows = matrix.len();
    let cols = matrix.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 || matrix.iter().any(|r| r.len() != cols) {
        return Err(Error::InvalidInput("need a non-empty rectangular matrix".into()));
    }
    if !(margin.is_finite() && margin > 0.0) {
        return Err(Error::InvalidInput(format!("margin {margin} must be positive")));
    }
    let cells: Vec<(usize, usize, f64)> = (0..rows)
        .flat_map(|i| (0..cols).map(move |j| (i, j, matrix[i][j])))
        .collect();
    if let Some(bad) = cells.iter().find(|c| !c.2.is_finite()) {
        return Err(Error::InvalidInput(format!("entry {} is not finite", bad.2)));
    }

    const BOX: f64 = 1e6;
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let a: Vec<_> = (0..rows).map(|_| lp.add_var(0.0, (-BOX, BOX))).collect();
    let b: Vec<_> = (0..cols).map(|_| lp.add_var(0.0, (-BOX, BOX))).collect();
    for (p, &(i, j, x)) in cells.iter().enumerate() {
        for &(k, l, y) in &cells[p + 1..] {
            if x == y {
                return Err(Error::InvalidInput(format!(
                    "entries ({}, {}) and ({}, {}) are tied",
                    i + 1,
                    j + 1,
                    k + 1,
                    l + 1
                )));
            }
            let ((i, j), (k, l)) = if x < y { ((i, j), (k, l)) } else { ((k, l), (i, j)) };
            // (a_k + b_l) − (a_i + b_j) ≥ margin; shared terms cancel.
            let mut terms = Vec::with_capacity(4);
            if k != i {
                terms.extend([(a[k], 1.0), (a[i], -1.0)]);
            }
            if l != j {
                terms.extend([(b[l], 1.0), (b[j], -1.0)]);
            }
            lp.add_constraint(terms.as_slice(), ComparisonOp::Ge, margin);
        }
    }
    match lp.solve() {
        Ok(_) => Ok(true),
        Err(microlp::Error::Infeasible) => Ok(false),
        Err(e) => Err(Error::InvalidInput(format!("linear program failed: {e}"))),
    }
}

/// Observation counts and values on the 2×2 binary grid, ordered
/// `(0,0), (1,0), (0,1), (1,1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinaryGrid {
    pub counts: [f64; 4],
    pub alphas: [f64; 4],
}

/// No-intercept least squares `a1 x1 + a2 x2` on a 2×2 binary grid, in
/// closed form. Needs at least two of `N10, N01, N11` positive.
pub fn ols_2x2_closed_form(grid: &BinaryGrid) -> Result<(f64, f64)> {
    let [_, n10, n01, n11] = grid.counts;
    let [_, a10, a01, a11] = grid.alphas;
    if grid.counts.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
        return Err(Error::InvalidInput("counts must be non-negative".into()));
    }
    if [n10, n01, n11].iter().filter(|&&c| c > 0.0).count() < 2 {
        return Err(Error::InvalidInput(
            "at least two of N10, N01, N11 must be positive".into(),
        ));
    }
    let s1 = n10 * a10 + n11 * a11;
    let s2 = n01 * a01 + n11 * a11;
    let det = n11 * (n01 + n10) + n10 * n01;
    let a1 = ((n01 + n11) * s1 - n11 * s2) / det;
    let a2 = (-n11 * s1 + (n11 + n10) * s2) / det;
    Ok((a1, a2))
}

/// Sign of `a1 − a2` when `(0,1)` is unobserved: `N10 N11 (2α10 − α11)`.
pub fn missing_cell_gap(n10: f64, n11: f64, a10: f64, a11: f64) -> f64 {
    n10 * n11 * (2.0 * a10 - a11)
}

/// Sign of `a1 − a2` when `α10 = α01 = α` and `α11 = 1`: `N11 (1 − 2α)(N01 − N10)`.
pub fn symmetric_gap(n10: f64, n01: f64, n11: f64, alpha: f64) -> f64 {
    n11 * (1.0 - 2.0 * alpha) * (n01 - n10)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    Interactions,
    Ranking,
}

impl Construction {
    pub fn build(self, m: u32) -> Result<CounterexampleMatrix> {
        match self {
            Construction::Interactions => build_m_interactions(m),
            Construction::Ranking => build_m_ranking(m),
        }
    }

    pub fn accepts(self, m: u32) -> bool {
        m > 0
            && match self {
                Construction::Interactions => m % 4 == 0,
                Construction::Ranking => m % 3 == 0,
            }
    }
}

/// How a linear fit and an exact isotonic fit do on one noiseless construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BiasReport {
    pub construction: Construction,
    pub m: u32,
    /// Mean squared per-entry error of the non-negative linear fit.
    pub nnls_mse: f64,
    /// Largest absolute deviation of the isotonic fit from the construction.
    pub iso_residual: f64,
    /// Kendall distance of the linear fit's ranking from the construction's.
    pub kendall_tau: f64,
}

/// Fits one record per lattice point of the construction, without noise.
pub fn demo_bias(construction: Construction, m: u32) -> Result<BiasReport> {
    let matrix = construction.build(m)?;
    let spec = matrix.lattice();
    let (points, targets) = matrix.lattice_values();
    let n = points.len();

    let linear = nnls_fit(&points, &vec![1.0; n], &targets)?;
    let nnls_mse = points
        .iter()
        .zip(&targets)
        .map(|(x, t)| (linear.value(x) - t).powi(2))
        .sum::<f64>()
        / n as f64;

    let dag = OrderDag::covering(points)?;
    let graph: &ConstraintGraph = dag.graph();
    let iso = isotonic_fit(graph, &WeightedTargets::unweighted(targets.clone())?)?;
    let iso_residual = iso
        .values()
        .iter()
        .zip(&targets)
        .map(|(f, t)| (f - t).abs())
        .fold(0.0, f64::max);

    Ok(BiasReport {
        construction,
        m,
        nnls_mse,
        iso_residual,
        kendall_tau: kendall_tau_distance(&linear, &matrix, &spec)?,
    })
}

/// Every applicable construction for each `m`, interactions first.
pub fn demo_bias_table(ms: &[u32]) -> Result<Vec<BiasReport>> {
    let mut rows = Vec::new();
    for &m in ms {
        let mut any = false;
        for c in [Construction::Interactions, Construction::Ranking] {
            if c.accepts(m) {
                rows.push(demo_bias(c, m)?);
                any = true;
            }
        }
        if !any {
            return Err(Error::InvalidInput(format!("m = {m} is not a multiple of 3 or 4")));
        }
    }
    Ok(rows)
}

/// Writes rows as CSV with columns `construction,m,nnls_mse,iso_residual,kendall_tau`.
pub fn write_bias_csv<W: std::io::Write>(rows: &[BiasReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Outcome of one named feasibility check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckOutcome {
    pub check: String,
    pub expected: bool,
    pub observed: bool,
}

/// The feasibility premises of the constructions, each with its expected answer.
pub fn feasibility_checks() -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    for (k, ok) in check_interaction_chains(&build_b4())?.into_iter().enumerate() {
        out.push(CheckOutcome {
            check: format!("b4_chain_{}", k + 1),
            expected: true,
            observed: ok,
        });
    }
    out.push(CheckOutcome {
        check: "b4_transpose_chain_1".into(),
        expected: false,
        observed: check_interaction_chains(&build_b4().transpose())?[0],
    });
    out.push(CheckOutcome {
        check: "ranking_3_additive_order".into(),
        expected: false,
        observed: gam_orderable(build_m_ranking(3)?.rows(), 1.0)?,
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dag::{is_isotonic, IsotonicAssignment};
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-15
    }

    #[test]
    fn b4_entries_and_chains() {
        let b = build_b4();
        assert_eq!(b.entry(1, 1), 1.0 / 12.0);
        assert_eq!(b.entry(3, 2), 8.0 / 12.0);
        assert!(b.is_bivariate_isotonic());
        assert_eq!(check_interaction_chains(&b).unwrap(), [true; 4]);
        assert!(!check_interaction_chains(&b.transpose()).unwrap()[0]);
        let constant = CounterexampleMatrix {
            provenance: Provenance::B4,
            entries: vec![vec![0.5; 4]; 4],
        };
        assert_eq!(check_interaction_chains(&constant).unwrap(), [false; 4]);
        assert!(check_interaction_chains(&build_b3()).is_err());
    }

    #[test]
    fn interactions_expansion() {
        assert_eq!(build_m_interactions(4).unwrap().rows(), build_b4().rows());
        let m8 = build_m_interactions(8).unwrap();
        assert_eq!(m8.entry(1, 5), 6.0 / 12.0);
        let b4 = build_b4();
        for i in 1..=4 {
            for j in 1..=4 {
                for (di, dj) in [(0, 0), (4, 0), (0, 4), (4, 4)] {
                    let (r, c) = (i + di, j + dj);
                    assert_eq!(m8.entry(r, c), b4.entry(r.div_ceil(2), c.div_ceil(2)));
                }
            }
        }
        assert!(build_m_interactions(6).is_err());
        assert!(build_m_interactions(0).is_err());
    }

    #[test]
    fn ranking_construction() {
        let m3 = build_m_ranking(3).unwrap();
        assert!(close(m3.entry(1, 1), 0.1 + 1.0 / 30.0 + 1.0 / 90.0));
        for m in [3, 6, 9] {
            let r = build_m_ranking(m).unwrap();
            assert!(r.is_bivariate_isotonic(), "m = {m}");
            let mut flat: Vec<f64> = r.rows().concat();
            assert!(flat.iter().all(|&v| v > 0.0 && v < 1.0));
            flat.sort_by(f64::total_cmp);
            assert!(flat.windows(2).all(|w| w[0] < w[1]), "m = {m} has ties");
        }
        assert!(build_m_ranking(4).is_err());
    }

    #[test]
    fn unique_tensor() {
        let spec = LatticeSpec::unit(2, 2).unwrap();
        let t = build_unique_tensor(&spec).unwrap();
        assert!(close(t.value(&CriteriaVector::new(vec![1, 1])), 3.0 / 8.0));
        assert!(close(t.value(&CriteriaVector::new(vec![2, 2])), 6.0 / 8.0));
        for spec in [LatticeSpec::unit(2, 2).unwrap(), LatticeSpec::unit(3, 4).unwrap()] {
            let t = build_unique_tensor(&spec).unwrap();
            let mut v = t.values().to_vec();
            v.sort_by(f64::total_cmp);
            assert!(v.windows(2).all(|w| w[0] < w[1]));
            assert!(v.iter().all(|&x| x > 0.0 && x <= 1.0));
            let dag = OrderDag::covering(spec.points().collect()).unwrap();
            let vals = spec.points().map(|x| t.value(&x)).collect();
            assert!(is_isotonic(dag.graph(), &IsotonicAssignment::new(vals)).unwrap());
        }
        assert!(build_unique_tensor(&LatticeSpec::unit(7, 8).unwrap()).is_err());
    }

    #[test]
    fn constructions_isotonic_on_lattice() {
        for matrix in [
            build_b4(),
            build_b3(),
            build_m_interactions(8).unwrap(),
            build_m_ranking(6).unwrap(),
        ] {
            let (points, values) = matrix.lattice_values();
            let dag = OrderDag::covering(points).unwrap();
            assert!(is_isotonic(dag.graph(), &IsotonicAssignment::new(values.clone())).unwrap());
            assert!(values.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn additive_orders() {
        let outer: Vec<Vec<f64>> = [0.0, 1.0, 2.0]
            .iter()
            .map(|a| [0.0, 0.1, 0.2].iter().map(|b| a + b).collect())
            .collect();
        assert!(gam_orderable(&outer, 1.0).unwrap());
        assert!(!gam_orderable(build_m_ranking(3).unwrap().rows(), 1.0).unwrap());
        assert!(!gam_orderable(build_b3().rows(), 1.0).unwrap());
        assert!(gam_orderable(&[vec![0.1, 0.1], vec![0.2, 0.3]], 1.0).is_err());
        assert!(gam_orderable(&[vec![0.1, 0.2], vec![0.3]], 1.0).is_err());
    }

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for k in 0..=p.len() {
                let mut q = p.clone();
                q.insert(k, n - 1);
                out.push(q);
            }
        }
        out
    }

    // A 2×2 strict order is additive iff both rows and both columns compare
    // the same way; every isotonic one qualifies.
    #[test]
    fn all_2x2_strict_orders() {
        let mut additive = 0;
        for p in permutations(4) {
            let m = vec![vec![p[0] as f64, p[1] as f64], vec![p[2] as f64, p[3] as f64]];
            let rows_agree = (m[0][0] < m[0][1]) == (m[1][0] < m[1][1]);
            let cols_agree = (m[0][0] < m[1][0]) == (m[0][1] < m[1][1]);
            let ok = gam_orderable(&m, 1.0).unwrap();
            assert_eq!(ok, rows_agree && cols_agree, "{m:?}");
            let isotonic = m[0][0] < m[0][1] && m[0][0] < m[1][0] && m[0][1] < m[1][1] && m[1][0] < m[1][1];
            if isotonic {
                assert!(ok);
            }
            additive += ok as usize;
        }
        assert_eq!(additive, 8);
    }

    #[test]
    fn closed_form_examples() {
        let g = BinaryGrid {
            counts: [0.0, 1.0, 0.0, 1.0],
            alphas: [0.0, 0.25, 0.0, 1.0],
        };
        let (a1, a2) = ols_2x2_closed_form(&g).unwrap();
        assert!(close(a1, 0.25) && close(a2, 0.75));
        assert!(missing_cell_gap(1.0, 1.0, 0.25, 1.0) < 0.0);

        let g = BinaryGrid {
            counts: [1.0, 2.0, 1.0, 1.0],
            alphas: [0.0, 0.3, 0.3, 1.0],
        };
        let (a1, a2) = ols_2x2_closed_form(&g).unwrap();
        assert!(a1 < a2);
        assert!(symmetric_gap(2.0, 1.0, 1.0, 0.3) < 0.0);

        let g = BinaryGrid {
            counts: [3.0, 2.0, 2.0, 5.0],
            alphas: [0.0, 0.4, 0.4, 0.9],
        };
        let (a1, a2) = ols_2x2_closed_form(&g).unwrap();
        assert!((a1 - a2).abs() < 1e-15);

        let degenerate = BinaryGrid {
            counts: [5.0, 0.0, 0.0, 3.0],
            alphas: [0.0; 4],
        };
        assert!(ols_2x2_closed_form(&degenerate).is_err());
    }

    #[test]
    fn bias_demo_rows() {
        let r = demo_bias(Construction::Interactions, 4).unwrap();
        assert!(r.iso_residual <= 1e-12);
        assert!(r.nnls_mse >= 5.43e-5);
        let r = demo_bias(Construction::Ranking, 3).unwrap();
        assert!(r.kendall_tau >= 0.012);
        let table = demo_bias_table(&[4, 12]).unwrap();
        assert_eq!(table.len(), 3);
        assert!(demo_bias_table(&[5]).is_err());
        let mut out = Vec::new();
        write_bias_csv(&table, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("construction,m,nnls_mse,iso_residual,kendall_tau\ninteractions,4,"));
    }

    #[test]
    fn feasibility_premises_hold() {
        for c in feasibility_checks().unwrap() {
            assert_eq!(c.expected, c.observed, "{}", c.check);
        }
    }

    proptest! {
        #[test]
        fn random_additive_orderable(a in prop::array::uniform3(-5.0f64..5.0), b in prop::array::uniform3(-5.0f64..5.0)) {
            let m: Vec<Vec<f64>> = a.iter().map(|ai| b.iter().map(|bj| ai + bj).collect()).collect();
            let mut flat = m.concat();
            flat.sort_by(f64::total_cmp);
            prop_assume!(flat.windows(2).all(|w| w[1] - w[0] > 1e-6));
            prop_assert!(gam_orderable(&m, 1.0).unwrap());
        }

        #[test]
        fn closed_form_solves_normal_equations(
            counts in prop::array::uniform4(0u32..20),
            alphas in prop::array::uniform4(0.0f64..1.0),
        ) {
            let [_, n10, n01, n11] = counts.map(f64::from);
            prop_assume!([n10, n01, n11].iter().filter(|&&c| c > 0.0).count() >= 2);
            let g = BinaryGrid { counts: counts.map(f64::from), alphas };
            let (a1, a2) = ols_2x2_closed_form(&g).unwrap();
            let r1 = n10 * (alphas[1] - a1) + n11 * (alphas[3] - a1 - a2);
            let r2 = n01 * (alphas[2] - a2) + n11 * (alphas[3] - a1 - a2);
            prop_assert!(r1.abs() < 1e-9 && r2.abs() < 1e-9);
        }
    }
}
