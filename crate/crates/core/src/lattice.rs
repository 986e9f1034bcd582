//! Criteria lattices `[m]^d` and the coordinate-wise dominance order on them.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported `d * log2(m)`; keeps `m^d` well inside `u64`.
const MAX_LATTICE_BITS: f64 = 40.0;

/// Geometry of the criteria lattice plus the raw range of the overall score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    d: usize,
    m: u32,
    score_min: f64,
    score_max: f64,
}

impl LatticeSpec {
    pub fn new(d: usize, m: u32, score_min: f64, score_max: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidLattice("need at least one criterion".into()));
        }
        if m < 2 {
            return Err(Error::InvalidLattice(format!(
                "need at least two score levels, got {m}"
            )));
        }
        if (d as f64) * f64::from(m).log2() > MAX_LATTICE_BITS {
            return Err(Error::InvalidLattice(format!(
                "lattice {m}^{d} exceeds 2^{MAX_LATTICE_BITS} points"
            )));
        }
        if !(score_min.is_finite() && score_max.is_finite() && score_min < score_max) {
            return Err(Error::InvalidLattice(format!(
                "score range [{score_min}, {score_max}] is empty or not finite"
            )));
        }
        Ok(Self {
            d,
            m,
            score_min,
            score_max,
        })
    }

    /// Lattice whose raw scores already live on `[0, 1]`.
    pub fn unit(d: usize, m: u32) -> Result<Self> {
        Self::new(d, m, 0.0, 1.0)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn score_min(&self) -> f64 {
        self.score_min
    }

    pub fn score_max(&self) -> f64 {
        self.score_max
    }

    /// Number of lattice points, `m^d`.
    pub fn size(&self) -> u64 {
        u64::from(self.m).pow(self.d as u32)
    }

    /// Maps a raw overall score onto `[0, 1]`.
    pub fn rescale(&self, y_raw: f64) -> Result<f64> {
        if !(y_raw >= self.score_min && y_raw <= self.score_max) {
            return Err(Error::ScoreOutOfRange {
                index: 0,
                value: y_raw,
                min: self.score_min,
                max: self.score_max,
            });
        }
        Ok(self.rescale_unchecked(y_raw))
    }

    pub(crate) fn rescale_unchecked(&self, y_raw: f64) -> f64 {
        (y_raw - self.score_min) / (self.score_max - self.score_min)
    }

    /// Inverse of [`rescale`](Self::rescale).
    pub fn unscale(&self, y: f64) -> f64 {
        self.score_min + y * (self.score_max - self.score_min)
    }

    /// Validates `coords` and wraps them as a lattice point.
    pub fn point(&self, coords: impl Into<Vec<u32>>) -> Result<CriteriaVector> {
        let x = CriteriaVector(coords.into());
        self.check(&x)?;
        Ok(x)
    }

    pub fn check(&self, x: &CriteriaVector) -> Result<()> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: x.len(),
            });
        }
        for (position, &value) in x.0.iter().enumerate() {
            if value < 1 || value > self.m {
                return Err(Error::CoordinateOutOfRange {
                    position,
                    value,
                    m: self.m,
                });
            }
        }
        Ok(())
    }

    /// Mixed-radix index of a point; criterion 0 is the fastest-varying digit.
    pub fn index_of(&self, x: &CriteriaVector) -> u64 {
        let m = u64::from(self.m);
        x.0.iter()
            .rev()
            .fold(0u64, |acc, &c| acc * m + u64::from(c - 1))
    }

    pub fn point_at(&self, mut index: u64) -> CriteriaVector {
        let m = u64::from(self.m);
        let coords = (0..self.d)
            .map(|_| {
                let c = (index % m) as u32 + 1;
                index /= m;
                c
            })
            .collect();
        CriteriaVector(coords)
    }

    /// Iterates every lattice point in index order.
    pub fn points(&self) -> impl Iterator<Item = CriteriaVector> + '_ {
        (0..self.size()).map(move |i| self.point_at(i))
    }

    /// Index stride of criterion `i`.
    pub(crate) fn stride(&self, i: usize) -> u64 {
        u64::from(self.m).pow(i as u32)
    }
}

/// A vector of integer criterion scores.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CriteriaVector(Vec<u32>);

impl CriteriaVector {
    /// Wraps raw coordinates without range validation; see [`LatticeSpec::point`].
    pub fn new(coords: impl Into<Vec<u32>>) -> Self {
        Self(coords.into())
    }

    pub fn coords(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> u64 {
        self.0.iter().map(|&c| u64::from(c)).sum()
    }

    /// `self ⪯ other` coordinate-wise (equality included).
    pub fn precedes(&self, other: &Self) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }
}

impl From<Vec<u32>> for CriteriaVector {
    fn from(v: Vec<u32>) -> Self {
        Self(v)
    }
}

impl fmt::Display for CriteriaVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Outcome of comparing two points under coordinate-wise dominance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dominance {
    Equal,
    Dominates,
    Dominated,
    Incomparable,
}

impl Dominance {
    pub fn as_partial_ordering(self) -> Option<Ordering> {
        match self {
            Dominance::Equal => Some(Ordering::Equal),
            Dominance::Dominates => Some(Ordering::Greater),
            Dominance::Dominated => Some(Ordering::Less),
            Dominance::Incomparable => None,
        }
    }
}

pub fn compare(a: &CriteriaVector, b: &CriteriaVector) -> Result<Dominance> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(compare_unchecked(a.coords(), b.coords()))
}

pub(crate) fn compare_unchecked(a: &[u32], b: &[u32]) -> Dominance {
    let mut ge = true;
    let mut le = true;
    for (x, y) in a.iter().zip(b) {
        match x.cmp(y) {
            Ordering::Greater => le = false,
            Ordering::Less => ge = false,
            Ordering::Equal => {}
        }
        if !ge && !le {
            return Dominance::Incomparable;
        }
    }
    match (ge, le) {
        (true, true) => Dominance::Equal,
        (true, false) => Dominance::Dominates,
        (false, true) => Dominance::Dominated,
        (false, false) => Dominance::Incomparable,
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
    fn compare_examples() {
        assert_eq!(compare(&v(&[2, 2]), &v(&[2, 2])).unwrap(), Dominance::Equal);
        assert_eq!(
            compare(&v(&[3, 1]), &v(&[2, 1])).unwrap(),
            Dominance::Dominates
        );
        assert_eq!(
            compare(&v(&[2, 1]), &v(&[3, 1])).unwrap(),
            Dominance::Dominated
        );
        assert_eq!(
            compare(&v(&[1, 2]), &v(&[2, 1])).unwrap(),
            Dominance::Incomparable
        );
    }

    #[test]
    fn compare_rejects_dimension_mismatch() {
        assert!(matches!(
            compare(&v(&[1, 2]), &v(&[1, 2, 3])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rescale_examples() {
        let spec = LatticeSpec::new(2, 5, 1.0, 10.0).unwrap();
        assert_eq!(spec.rescale(1.0).unwrap(), 0.0);
        assert_eq!(spec.rescale(10.0).unwrap(), 1.0);
        assert!((spec.rescale(8.0).unwrap() - 7.0 / 9.0).abs() < 1e-15);
        assert!(spec.rescale(10.5).is_err());
        assert!(spec.rescale(f64::NAN).is_err());
    }

    #[test]
    fn lattice_validation() {
        assert!(LatticeSpec::new(0, 5, 0.0, 1.0).is_err());
        assert!(LatticeSpec::new(2, 1, 0.0, 1.0).is_err());
        assert!(LatticeSpec::new(2, 5, 1.0, 1.0).is_err());
        assert!(LatticeSpec::new(41, 2, 0.0, 1.0).is_err());
        assert!(LatticeSpec::new(40, 2, 0.0, 1.0).is_ok());
        assert!(LatticeSpec::new(1, 2, 0.0, 1.0).is_ok());
        let spec = LatticeSpec::unit(2, 5).unwrap();
        assert!(spec.point(vec![0, 1]).is_err());
        assert!(spec.point(vec![6, 1]).is_err());
        assert!(spec.point(vec![1, 1, 1]).is_err());
    }

    #[test]
    fn index_round_trip() {
        let spec = LatticeSpec::unit(3, 4).unwrap();
        assert_eq!(spec.size(), 64);
        for (i, x) in spec.points().enumerate() {
            assert_eq!(spec.index_of(&x), i as u64);
        }
        assert_eq!(spec.point_at(0), v(&[1, 1, 1]));
        assert_eq!(spec.point_at(1), v(&[2, 1, 1]));
        assert_eq!(spec.point_at(63), v(&[4, 4, 4]));
    }

    proptest! {
        #[test]
        fn rescale_inverse(y in 1.0f64..=10.0) {
            let spec = LatticeSpec::new(2, 5, 1.0, 10.0).unwrap();
            let back = spec.unscale(spec.rescale(y).unwrap());
            prop_assert!((back - y).abs() <= 1e-12);
        }

        #[test]
        fn compare_antisymmetric_and_transitive(
            a in prop::collection::vec(1u32..=4, 3),
            b in prop::collection::vec(1u32..=4, 3),
            c in prop::collection::vec(1u32..=4, 3),
        ) {
            let (a, b, c) = (v(&a), v(&b), v(&c));
            let ab = compare(&a, &b).unwrap();
            let ba = compare(&b, &a).unwrap();
            let expected = match ab {
                Dominance::Equal => Dominance::Equal,
                Dominance::Dominates => Dominance::Dominated,
                Dominance::Dominated => Dominance::Dominates,
                Dominance::Incomparable => Dominance::Incomparable,
            };
            prop_assert_eq!(ba, expected);
            if a.precedes(&b) && b.precedes(&c) {
                prop_assert!(a.precedes(&c));
            }
        }
    }
}
