//! Evaluation records and their per-point summaries.

use std::collections::BTreeMap;

use crate::dag::OrderDag;
use crate::error::{Error, Result};
use crate::lattice::{CriteriaVector, LatticeSpec};

/// One rated item: integer criteria scores and an overall score.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationRecord {
    x: CriteriaVector,
    y_raw: f64,
    y: f64,
}

impl EvaluationRecord {
    pub fn x(&self) -> &CriteriaVector {
        &self.x
    }

    /// Overall score on its original scale.
    pub fn y_raw(&self) -> f64 {
        self.y_raw
    }

    /// Overall score rescaled to the unit interval.
    pub fn y(&self) -> f64 {
        self.y
    }
}

/// An ordered collection of records on one lattice. Duplicate inputs are kept.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    spec: LatticeSpec,
    records: Vec<EvaluationRecord>,
}

impl Dataset {
    /// Builds a dataset from raw-scale scores, which must lie in the spec's score range.
    pub fn from_raw(spec: LatticeSpec, rows: Vec<(CriteriaVector, f64)>) -> Result<Self> {
        let mut records = Vec::with_capacity(rows.len());
        for (index, (x, y_raw)) in rows.into_iter().enumerate() {
            spec.check(&x)?;
            let y = spec.rescale(y_raw).map_err(|_| Error::ScoreOutOfRange {
                index,
                value: y_raw,
                min: spec.score_min(),
                max: spec.score_max(),
            })?;
            records.push(EvaluationRecord { x, y_raw, y });
        }
        Self::from_records(spec, records)
    }

    /// Builds a dataset from scores already on the unit scale.
    ///
    /// Scores are not range-checked, only required to be finite: noisy
    /// synthetic targets may fall outside `[0, 1]`.
    pub fn from_unit(spec: LatticeSpec, rows: Vec<(CriteriaVector, f64)>) -> Result<Self> {
        let mut records = Vec::with_capacity(rows.len());
        for (index, (x, y)) in rows.into_iter().enumerate() {
            spec.check(&x)?;
            if !y.is_finite() {
                return Err(Error::ScoreOutOfRange {
                    index,
                    value: y,
                    min: f64::NEG_INFINITY,
                    max: f64::INFINITY,
                });
            }
            records.push(EvaluationRecord {
                y_raw: spec.unscale(y),
                x,
                y,
            });
        }
        Self::from_records(spec, records)
    }

    fn from_records(spec: LatticeSpec, records: Vec<EvaluationRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(Self { spec, records })
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn records(&self) -> &[EvaluationRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    /// Always false; a dataset holds at least one record.
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// The records at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let records = indices
            .iter()
            .map(|&i| {
                self.records.get(i).cloned().ok_or_else(|| {
                    Error::InvalidInput(format!("record index {i} out of range"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_records(self.spec, records)
    }

    /// Groups records by input and builds the covering DAG over distinct inputs.
    ///
    /// Points come out in lexicographic order and each mean is summed over
    /// sorted scores, so the result does not depend on record order.
    pub fn summarize(&self) -> Summary {
        let mut groups: BTreeMap<&CriteriaVector, Vec<f64>> = BTreeMap::new();
        for r in &self.records {
            groups.entry(&r.x).or_default().push(r.y);
        }
        let mut points = Vec::with_capacity(groups.len());
        let mut within_ss = 0.0;
        for (x, mut ys) in groups {
            ys.sort_by(f64::total_cmp);
            let mean = refined_mean(&ys, &vec![1.0; ys.len()]);
            within_ss += ys.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>();
            points.push(UniquePointSummary {
                point: x.clone(),
                count: ys.len(),
                mean_y: mean,
            });
        }
        let dag = OrderDag::covering(points.iter().map(|p| p.point.clone()).collect())
            .expect("distinct points of one lattice");
        Summary {
            points,
            dag,
            within_ss,
            n: self.records.len(),
        }
    }
}

/// Weighted mean with one correction pass, exact when all values agree.
pub(crate) fn refined_mean(values: &[f64], weights: &[f64]) -> f64 {
    let total: f64 = weights.iter().sum();
    let mean = values.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>() / total;
    let correction = values
        .iter()
        .zip(weights)
        .map(|(v, w)| w * (v - mean))
        .sum::<f64>()
        / total;
    mean + correction
}

/// All records sharing one input.
#[derive(Debug, Clone, PartialEq)]
pub struct UniquePointSummary {
    pub point: CriteriaVector,
    pub count: usize,
    pub mean_y: f64,
}

/// Deduplicated view of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    points: Vec<UniquePointSummary>,
    dag: OrderDag,
    within_ss: f64,
    n: usize,
}

impl Summary {
    pub fn points(&self) -> &[UniquePointSummary] {
        &self.points
    }

    pub fn dag(&self) -> &OrderDag {
        &self.dag
    }

    /// Sum over points of squared deviations of each record from its point mean.
    pub fn within_ss(&self) -> f64 {
        self.within_ss
    }

    /// Number of records summarized.
    pub fn n_records(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn counts(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.count as f64).collect()
    }

    pub fn means(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.mean_y).collect()
    }

    /// Empirical frequencies `n_u / N`.
    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.points.iter().map(|p| p.count as f64 / n).collect()
    }

    pub fn inputs(&self) -> Vec<CriteriaVector> {
        self.points.iter().map(|p| p.point.clone()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(c: &[u32]) -> CriteriaVector {
        CriteriaVector::new(c.to_vec())
    }

    #[test]
    fn summarize_pools_duplicates() {
        let spec = LatticeSpec::unit(2, 3).unwrap();
        let ds = Dataset::from_unit(
            spec,
            vec![(v(&[1, 1]), 0.0), (v(&[1, 1]), 1.0), (v(&[2, 2]), 0.5)],
        )
        .unwrap();
        let s = ds.summarize();
        assert_eq!(s.len(), 2);
        assert_eq!(s.points()[0].point, v(&[1, 1]));
        assert_eq!(s.points()[0].count, 2);
        assert_eq!(s.points()[0].mean_y, 0.5);
        assert_eq!(s.points()[1].count, 1);
        assert_eq!(s.dag().edges(), &[(0, 1)]);
        assert_eq!(s.within_ss(), 0.5);
    }

    #[test]
    fn single_record_and_antichain() {
        let spec = LatticeSpec::unit(2, 3).unwrap();
        let one = Dataset::from_unit(spec, vec![(v(&[2, 3]), 0.4)]).unwrap();
        assert_eq!(one.summarize().len(), 1);
        assert!(one.summarize().dag().edges().is_empty());

        let anti = Dataset::from_unit(
            spec,
            vec![(v(&[1, 3]), 0.1), (v(&[2, 2]), 0.2), (v(&[3, 1]), 0.3)],
        )
        .unwrap();
        let s = anti.summarize();
        assert_eq!(s.len(), 3);
        assert!(s.dag().edges().is_empty());
    }

    #[test]
    fn raw_scores_validated() {
        let spec = LatticeSpec::new(1, 5, 1.0, 10.0).unwrap();
        let ds = Dataset::from_raw(spec, vec![(v(&[2]), 8.0)]).unwrap();
        assert!((ds.records()[0].y() - 7.0 / 9.0).abs() < 1e-15);
        let err = Dataset::from_raw(spec, vec![(v(&[2]), 8.0), (v(&[2]), 11.0)]).unwrap_err();
        assert!(matches!(err, Error::ScoreOutOfRange { index: 1, .. }));
        assert!(Dataset::from_raw(spec, vec![(v(&[6]), 8.0)]).is_err());
        assert!(matches!(
            Dataset::from_raw(spec, vec![]),
            Err(Error::EmptyDataset)
        ));
    }

    proptest! {
        #[test]
        fn summarize_permutation_invariant(
            rows in prop::collection::vec(((1u32..=3, 1u32..=3), -1.0f64..2.0), 1..40),
            shuffle_seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let spec = LatticeSpec::unit(2, 3).unwrap();
            let rows: Vec<_> = rows.into_iter().map(|((a, b), y)| (v(&[a, b]), y)).collect();
            let mut shuffled = rows.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(shuffle_seed));
            let s1 = Dataset::from_unit(spec, rows.clone()).unwrap().summarize();
            let s2 = Dataset::from_unit(spec, shuffled).unwrap().summarize();
            prop_assert_eq!(&s1, &s2);
            prop_assert_eq!(s1.points().iter().map(|p| p.count).sum::<usize>(), rows.len());
            for p in s1.points() {
                let ys: Vec<f64> = rows.iter().filter(|(x, _)| *x == p.point).map(|r| r.1).collect();
                let mean = ys.iter().sum::<f64>() / ys.len() as f64;
                prop_assert!((mean - p.mean_y).abs() <= 1e-12);
            }
        }
    }
}
