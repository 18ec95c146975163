//! Closed intervals and axis-aligned hyper-rectangles.
//!
//! Every set the planner touches (initial sets, targets, obstacles, the arena
//! and tube cross-sections) is an axis-aligned box. Intervals are closed, so two
//! boxes that only share a boundary point are reported as intersecting.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("projection index {index} out of range for {dims}-dimensional rectangle")]
    IndexOutOfRange { index: usize, dims: usize },
    #[error("projection mask must be strictly increasing")]
    UnorderedMask,
    #[error("a hyper-rectangle needs at least one dimension")]
    Empty,
}

/// Closed interval `[lo, hi]` with finite endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, GeometryError> {
        if !lo.is_finite() || !hi.is_finite() || lo > hi {
            return Err(GeometryError::InvalidInterval { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    #[inline]
    pub fn lo(&self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn hi(&self) -> f64 {
        self.hi
    }

    #[inline]
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    #[inline]
    pub fn center(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    #[inline]
    pub fn overlaps(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    #[inline]
    pub fn contains_interval(&self, inner: &Interval) -> bool {
        self.lo <= inner.lo && inner.hi <= self.hi
    }

    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Signed gap to `other`; negative when the intervals overlap.
    pub fn gap(&self, other: &Interval) -> f64 {
        (other.lo - self.hi).max(self.lo - other.hi)
    }

    /// Grows the interval by `margin` on both sides.
    pub fn inflate(&self, margin: f64) -> Interval {
        Interval {
            lo: self.lo - margin,
            hi: self.hi + margin,
        }
    }

    pub fn shift(&self, by: f64) -> Interval {
        Interval {
            lo: self.lo + by,
            hi: self.hi + by,
        }
    }
}

impl TryFrom<[f64; 2]> for Interval {
    type Error = GeometryError;

    fn try_from(v: [f64; 2]) -> Result<Self, Self::Error> {
        Interval::new(v[0], v[1])
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}

/// Axis-aligned box, the Cartesian product of one [`Interval`] per dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Interval>", into = "Vec<Interval>")]
pub struct HyperRect {
    dims: Vec<Interval>,
}

impl HyperRect {
    pub fn new(dims: Vec<Interval>) -> Result<Self, GeometryError> {
        if dims.is_empty() {
            return Err(GeometryError::Empty);
        }
        Ok(Self { dims })
    }

    /// Builds a box from `[lo, hi]` pairs.
    pub fn from_bounds(bounds: &[[f64; 2]]) -> Result<Self, GeometryError> {
        let dims = bounds
            .iter()
            .map(|b| Interval::new(b[0], b[1]))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(dims)
    }

    #[inline]
    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    #[inline]
    pub fn dims(&self) -> &[Interval] {
        &self.dims
    }

    #[inline]
    pub fn dim(&self, k: usize) -> &Interval {
        &self.dims[k]
    }

    pub fn center(&self) -> Vec<f64> {
        self.dims.iter().map(Interval::center).collect()
    }

    fn check_dims(&self, other: &HyperRect) -> Result<(), GeometryError> {
        if self.ndim() != other.ndim() {
            return Err(GeometryError::DimensionMismatch {
                left: self.ndim(),
                right: other.ndim(),
            });
        }
        Ok(())
    }

    /// Closed-set intersection test: touching faces count.
    pub fn intersects(&self, other: &HyperRect) -> Result<bool, GeometryError> {
        self.check_dims(other)?;
        Ok(self.intersects_unchecked(other))
    }

    #[inline]
    pub(crate) fn intersects_unchecked(&self, other: &HyperRect) -> bool {
        self.dims
            .iter()
            .zip(&other.dims)
            .all(|(a, b)| a.overlaps(b))
    }

    pub fn contains(&self, inner: &HyperRect) -> Result<bool, GeometryError> {
        self.check_dims(inner)?;
        Ok(self.contains_unchecked(inner))
    }

    #[inline]
    pub(crate) fn contains_unchecked(&self, inner: &HyperRect) -> bool {
        self.dims
            .iter()
            .zip(&inner.dims)
            .all(|(a, b)| a.contains_interval(b))
    }

    /// Closed membership of a point.
    pub fn contains_point(&self, x: &[f64]) -> bool {
        x.len() == self.ndim() && self.dims.iter().zip(x).all(|(i, &v)| i.contains(v))
    }

    /// Strict interior membership of a point.
    pub fn contains_point_strictly(&self, x: &[f64]) -> bool {
        x.len() == self.ndim()
            && self
                .dims
                .iter()
                .zip(x)
                .all(|(i, &v)| i.lo < v && v < i.hi)
    }

    /// Sub-rectangle on the dimensions listed in `mask` (strictly increasing).
    pub fn project(&self, mask: &[usize]) -> Result<HyperRect, GeometryError> {
        if mask.is_empty() {
            return Err(GeometryError::Empty);
        }
        if mask.windows(2).any(|w| w[0] >= w[1]) {
            return Err(GeometryError::UnorderedMask);
        }
        let dims = mask
            .iter()
            .map(|&k| {
                self.dims.get(k).copied().ok_or(GeometryError::IndexOutOfRange {
                    index: k,
                    dims: self.ndim(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(HyperRect { dims })
    }

    pub fn inflate(&self, margins: &[f64]) -> HyperRect {
        HyperRect {
            dims: self
                .dims
                .iter()
                .zip(margins)
                .map(|(i, &m)| i.inflate(m))
                .collect(),
        }
    }

    /// Returns a copy with dimension `k` replaced.
    pub fn with_dim(&self, k: usize, interval: Interval) -> HyperRect {
        let mut dims = self.dims.clone();
        dims[k] = interval;
        HyperRect { dims }
    }
}

impl TryFrom<Vec<Interval>> for HyperRect {
    type Error = GeometryError;

    fn try_from(dims: Vec<Interval>) -> Result<Self, Self::Error> {
        HyperRect::new(dims)
    }
}

impl From<HyperRect> for Vec<Interval> {
    fn from(r: HyperRect) -> Self {
        r.dims
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rect(b: &[[f64; 2]]) -> HyperRect {
        HyperRect::from_bounds(b).unwrap()
    }

    #[test]
    fn disjoint_in_one_dimension() {
        let a = rect(&[[0.0, 1.0], [0.0, 1.0]]);
        let b = rect(&[[2.0, 3.0], [0.0, 1.0]]);
        assert!(!a.intersects(&b).unwrap());
    }

    #[test]
    fn shared_boundary_counts() {
        let a = rect(&[[0.0, 1.0], [0.0, 1.0]]);
        let b = rect(&[[1.0, 2.0], [0.5, 2.0]]);
        assert!(a.intersects(&b).unwrap());
    }

    #[test]
    fn obstacle_overlap() {
        let o1 = rect(&[[6.5, 7.0], [9.0, 9.5]]);
        let b = rect(&[[6.8, 7.2], [9.4, 9.6]]);
        assert!(o1.intersects(&b).unwrap());
    }

    #[test]
    fn mismatched_dims_error() {
        let a = rect(&[[0.0, 1.0]]);
        let b = rect(&[[0.0, 1.0], [0.0, 1.0]]);
        assert!(matches!(
            a.intersects(&b),
            Err(GeometryError::DimensionMismatch { left: 1, right: 2 })
        ));
        assert!(a.contains(&b).is_err());
    }

    #[test]
    fn containment() {
        let arena = rect(&[[0.0, 10.0], [0.0, 10.0]]);
        let ag1 = rect(&[[5.0, 5.5], [9.5, 10.0]]);
        assert!(arena.contains(&ag1).unwrap());
        assert!(ag1.contains(&ag1).unwrap());
        assert!(!rect(&[[0.0, 1.0]]).contains(&rect(&[[0.5, 1.5]])).unwrap());
    }

    #[test]
    fn projection() {
        let pi = std::f64::consts::PI;
        let r = rect(&[[0.0, 1.0], [2.0, 3.0], [-pi, pi]]);
        assert_eq!(r.project(&[0, 1]).unwrap(), rect(&[[0.0, 1.0], [2.0, 3.0]]));
        assert_eq!(r.project(&[0, 1, 2]).unwrap(), r);
        let s = rect(&[[5.0, 5.5], [9.5, 10.0], [0.0, 0.1]]);
        assert_eq!(s.project(&[0, 1]).unwrap(), rect(&[[5.0, 5.5], [9.5, 10.0]]));
        assert!(matches!(
            r.project(&[0, 3]),
            Err(GeometryError::IndexOutOfRange { index: 3, dims: 3 })
        ));
        assert!(matches!(r.project(&[1, 0]), Err(GeometryError::UnorderedMask)));
    }

    #[test]
    fn invalid_intervals_rejected() {
        assert!(Interval::new(1.0, 0.0).is_err());
        assert!(Interval::new(0.0, f64::INFINITY).is_err());
        assert!(Interval::new(f64::NAN, 0.0).is_err());
        assert!(HyperRect::new(vec![]).is_err());
    }

    fn arb_rect(n: usize) -> impl Strategy<Value = HyperRect> {
        prop::collection::vec((-5.0f64..5.0, 0.0f64..3.0), n).prop_map(|v| {
            HyperRect::new(
                v.into_iter()
                    .map(|(lo, w)| Interval::new(lo, lo + w).unwrap())
                    .collect(),
            )
            .unwrap()
        })
    }

    /// Brute-force oracle: sample a lattice of points in `a` and test membership in `b`,
    /// plus the corners of `b` in `a`. Exact for boxes whose overlap has positive volume
    /// along the lattice; the lattice includes the clamped projection of `b`'s bounds.
    fn sampled_overlap(a: &HyperRect, b: &HyperRect) -> bool {
        let n = a.ndim();
        let candidates: Vec<Vec<f64>> = (0..n)
            .map(|k| {
                let (ia, ib) = (a.dim(k), b.dim(k));
                let mut c: Vec<f64> = (0..=8)
                    .map(|s| ia.lo() + ia.width() * s as f64 / 8.0)
                    .collect();
                c.push(ib.lo().clamp(ia.lo(), ia.hi()));
                c.push(ib.hi().clamp(ia.lo(), ia.hi()));
                c
            })
            .collect();
        let mut idx = vec![0usize; n];
        loop {
            let p: Vec<f64> = (0..n).map(|k| candidates[k][idx[k]]).collect();
            if a.contains_point(&p) && b.contains_point(&p) {
                return true;
            }
            let mut k = 0;
            loop {
                if k == n {
                    return false;
                }
                idx[k] += 1;
                if idx[k] < candidates[k].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }

    proptest! {
        #[test]
        fn intersects_is_symmetric(a in arb_rect(3), b in arb_rect(3)) {
            prop_assert_eq!(a.intersects(&b).unwrap(), b.intersects(&a).unwrap());
        }

        #[test]
        fn containment_propagates_intersection(a in arb_rect(2), b in arb_rect(2), c in arb_rect(2)) {
            if a.contains(&b).unwrap() && b.intersects(&c).unwrap() {
                prop_assert!(a.intersects(&c).unwrap());
            }
        }

        #[test]
        fn intersection_matches_sampling_2d(a in arb_rect(2), b in arb_rect(2)) {
            let strict_gap = a.dims().iter().zip(b.dims()).any(|(x, y)| x.gap(y) > 0.0);
            prop_assert_eq!(a.intersects(&b).unwrap(), !strict_gap);
            prop_assert_eq!(a.intersects(&b).unwrap(), sampled_overlap(&a, &b));
        }

        #[test]
        fn intersection_matches_sampling_3d(a in arb_rect(3), b in arb_rect(3)) {
            prop_assert_eq!(a.intersects(&b).unwrap(), sampled_overlap(&a, &b));
        }
    }
}
