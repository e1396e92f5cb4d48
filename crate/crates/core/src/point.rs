//! Integer lattice points and finite point sets.

use std::fmt;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::Int;

/// A point of ℤ^d with arbitrary-precision coordinates.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LatticePoint {
    coords: Vec<Int>,
}

impl LatticePoint {
    pub fn new(coords: Vec<Int>) -> Self {
        LatticePoint { coords }
    }

    pub fn from_ints(coords: &[i64]) -> Self {
        LatticePoint { coords: coords.iter().map(|&c| Int::from(c)).collect() }
    }

    pub fn zero(dim: usize) -> Self {
        LatticePoint { coords: vec![Int::zero(); dim] }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Int] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.is_zero())
    }

    pub fn add(&self, other: &LatticePoint) -> LatticePoint {
        debug_assert_eq!(self.dim(), other.dim());
        LatticePoint {
            coords: self.coords.iter().zip(other.coords.iter()).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &LatticePoint) -> LatticePoint {
        debug_assert_eq!(self.dim(), other.dim());
        LatticePoint {
            coords: self.coords.iter().zip(other.coords.iter()).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn neg(&self) -> LatticePoint {
        LatticePoint { coords: self.coords.iter().map(|c| -c).collect() }
    }

    pub fn dot(&self, other: &LatticePoint) -> Int {
        debug_assert_eq!(self.dim(), other.dim());
        self.coords.iter().zip(other.coords.iter()).map(|(a, b)| a * b).sum()
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// A finite subset of ℤ^d, stored lexicographically sorted and duplicate-free.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointSet {
    dim: usize,
    points: Vec<LatticePoint>,
}

impl PointSet {
    pub fn new(dim: usize, points: Vec<LatticePoint>) -> Result<Self> {
        for p in &points {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: p.dim() });
            }
        }
        let mut sorted = points;
        sorted.sort();
        for w in sorted.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicateElement(w[0].to_string()));
            }
        }
        Ok(PointSet { dim, points: sorted })
    }

    pub fn from_rows(rows: &[&[i64]]) -> Result<Self> {
        let dim = rows.first().map(|r| r.len()).unwrap_or(0);
        Self::new(dim, rows.iter().map(|r| LatticePoint::from_ints(r)).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, LatticePoint> {
        self.points.iter()
    }

    pub fn points(&self) -> &[LatticePoint] {
        &self.points
    }

    pub fn contains(&self, p: &LatticePoint) -> bool {
        self.points.binary_search(p).is_ok()
    }

    /// The set with the listed points removed.
    pub fn without(&self, removed: &[&LatticePoint]) -> PointSet {
        let points: Vec<LatticePoint> = self
            .points
            .iter()
            .filter(|p| !removed.contains(p))
            .cloned()
            .collect();
        PointSet { dim: self.dim, points }
    }
}

impl fmt::Display for PointSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, p) in self.points.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_set_sorts_and_rejects_duplicates() {
        let s = PointSet::from_rows(&[&[1, 0], &[0, 1], &[1, 1]]).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.points()[0], LatticePoint::from_ints(&[0, 1]));
        assert!(s.contains(&LatticePoint::from_ints(&[1, 1])));

        let err = PointSet::from_rows(&[&[1, 0], &[1, 0]]).unwrap_err();
        assert!(matches!(err, Error::DuplicateElement(_)));

        let err = PointSet::new(
            2,
            vec![LatticePoint::from_ints(&[1, 0]), LatticePoint::from_ints(&[1, 0, 0])],
        )
        .unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }
}
