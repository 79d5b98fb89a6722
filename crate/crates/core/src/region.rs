//! Unions of axis-aligned boxes and their flat parameter encoding.
//!
//! A union of `L` boxes in `p` dimensions is searched as a vector of `2pL`
//! reals laid out box by box, dimension by dimension, as `(low, high)` pairs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed box `[lower_0, upper_0] x ... x [lower_{p-1}, upper_{p-1}]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperRectangle {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl HyperRectangle {
    /// Requires matching lengths and `lower[j] < upper[j]` everywhere.
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                found: upper.len(),
            });
        }
        if lower.is_empty() {
            return Err(Error::InvalidArgument(
                "box needs at least one dimension".into(),
            ));
        }
        let b = Self { lower, upper };
        if !b.is_well_formed() {
            return Err(Error::InvalidArgument(format!(
                "box needs finite lower < upper in every dimension: {b:?}"
            )));
        }
        Ok(b)
    }

    pub fn interval(lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower], vec![upper])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn is_well_formed(&self) -> bool {
        self.lower.len() == self.upper.len()
            && self
                .lower
                .iter()
                .zip(&self.upper)
                .all(|(l, u)| l.is_finite() && u.is_finite() && l < u)
    }

    pub fn contains(&self, point: &[f64]) -> Result<bool> {
        if point.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: point.len(),
            });
        }
        Ok(self.contains_unchecked(point))
    }

    /// Membership without the dimension check; short-circuits on the first
    /// failing axis.
    #[inline]
    pub fn contains_unchecked(&self, point: &[f64]) -> bool {
        point
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (l, u))| *l <= *v && *v <= *u)
    }

    pub fn volume(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| u - l)
            .product()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| 0.5 * (l + u))
            .collect()
    }
}

/// Disjointness test: some axis `j` has `max(lower) > min(upper)`.
///
/// The inequality is strict, so boxes that share only a face are not
/// disjoint.
pub fn pair_disjoint(a: &HyperRectangle, b: &HyperRectangle) -> Result<bool> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(pair_disjoint_unchecked(a, b))
}

fn pair_disjoint_unchecked(a: &HyperRectangle, b: &HyperRectangle) -> bool {
    (0..a.dim()).any(|j| a.lower[j].max(b.lower[j]) > a.upper[j].min(b.upper[j]))
}

/// `L` pairwise-disjoint boxes sharing dimension `p`.
///
/// Equality ignores box order.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "Vec<HyperRectangle>", into = "Vec<HyperRectangle>")]
pub struct RegionUnion {
    boxes: Vec<HyperRectangle>,
    p: usize,
}

impl RegionUnion {
    /// Validates dimensions, box shape and pairwise disjointness.
    pub fn new(boxes: Vec<HyperRectangle>) -> Result<Self> {
        let p = boxes
            .first()
            .map(HyperRectangle::dim)
            .ok_or_else(|| Error::InvalidArgument("region needs at least one box".into()))?;
        if let Some(b) = boxes.iter().find(|b| b.dim() != p) {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: b.dim(),
            });
        }
        let r = Self { boxes, p };
        if !is_valid_union(&r) {
            return Err(Error::InvalidArgument(
                "boxes must be well formed and pairwise disjoint".into(),
            ));
        }
        Ok(r)
    }

    pub fn single(b: HyperRectangle) -> Self {
        let p = b.dim();
        Self { boxes: vec![b], p }
    }

    pub fn boxes(&self) -> &[HyperRectangle] {
        &self.boxes
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn contains(&self, point: &[f64]) -> Result<bool> {
        if point.len() != self.p {
            return Err(Error::DimensionMismatch {
                expected: self.p,
                found: point.len(),
            });
        }
        Ok(self.contains_unchecked(point))
    }

    #[inline]
    pub fn contains_unchecked(&self, point: &[f64]) -> bool {
        self.boxes.iter().any(|b| b.contains_unchecked(point))
    }

    /// Volume-weighted centroid of the boxes.
    pub fn center_of_mass(&self) -> Vec<f64> {
        let total: f64 = self.boxes.iter().map(HyperRectangle::volume).sum();
        let mut c = vec![0.0; self.p];
        for b in &self.boxes {
            let w = b.volume() / total;
            for (cj, bj) in c.iter_mut().zip(b.center()) {
                *cj += w * bj;
            }
        }
        c
    }
}

impl PartialEq for RegionUnion {
    fn eq(&self, other: &Self) -> bool {
        if self.p != other.p || self.boxes.len() != other.boxes.len() {
            return false;
        }
        let mut used = vec![false; other.boxes.len()];
        self.boxes.iter().all(|b| {
            match (0..other.boxes.len()).find(|&k| !used[k] && other.boxes[k] == *b) {
                Some(k) => {
                    used[k] = true;
                    true
                }
                None => false,
            }
        })
    }
}

impl TryFrom<Vec<HyperRectangle>> for RegionUnion {
    type Error = Error;

    fn try_from(boxes: Vec<HyperRectangle>) -> Result<Self> {
        Self::new(boxes)
    }
}

impl From<RegionUnion> for Vec<HyperRectangle> {
    fn from(r: RegionUnion) -> Self {
        r.boxes
    }
}

/// All boxes well formed and every pair disjoint.
pub fn is_valid_union(r: &RegionUnion) -> bool {
    if !r.boxes.iter().all(|b| b.dim() == r.p && b.is_well_formed()) {
        return false;
    }
    let boxes = &r.boxes;
    (0..boxes.len())
        .all(|a| (a + 1..boxes.len()).all(|b| pair_disjoint_unchecked(&boxes[a], &boxes[b])))
}

/// Why a parameter vector does not describe a usable union.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InvalidReason {
    ZeroWidth,
    NonFinite,
    Overlap,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Decoded {
    Valid(RegionUnion),
    Invalid(InvalidReason),
}

impl Decoded {
    pub fn valid(self) -> Option<RegionUnion> {
        match self {
            Decoded::Valid(r) => Some(r),
            Decoded::Invalid(_) => None,
        }
    }
}

/// Reads `(low, high)` pairs box by box. Reversed pairs are swapped, equal
/// pairs make the candidate invalid, overlapping boxes make it invalid.
pub fn decode(v: &[f64], l: usize, p: usize) -> Result<Decoded> {
    let expected = 2 * p * l;
    if v.len() != expected || expected == 0 {
        return Err(Error::WrongLength {
            expected,
            found: v.len(),
        });
    }
    let mut boxes = Vec::with_capacity(l);
    for chunk in v.chunks_exact(2 * p) {
        let mut lower = Vec::with_capacity(p);
        let mut upper = Vec::with_capacity(p);
        for pair in chunk.chunks_exact(2) {
            let (a, b) = (pair[0], pair[1]);
            if !a.is_finite() || !b.is_finite() {
                return Ok(Decoded::Invalid(InvalidReason::NonFinite));
            }
            if a == b {
                return Ok(Decoded::Invalid(InvalidReason::ZeroWidth));
            }
            lower.push(a.min(b));
            upper.push(a.max(b));
        }
        boxes.push(HyperRectangle { lower, upper });
    }
    let r = RegionUnion { boxes, p };
    if is_valid_union(&r) {
        Ok(Decoded::Valid(r))
    } else {
        Ok(Decoded::Invalid(InvalidReason::Overlap))
    }
}

/// Inverse of [`decode`] on valid unions.
pub fn encode(r: &RegionUnion) -> Vec<f64> {
    let mut v = Vec::with_capacity(2 * r.p * r.boxes.len());
    for b in &r.boxes {
        for (l, u) in b.lower.iter().zip(&b.upper) {
            v.push(*l);
            v.push(*u);
        }
    }
    v
}

/// Bucket of a point in a grid cut at the given per-axis thresholds.
///
/// Cells are half-open `[a, b)` except the last on each axis, and are
/// numbered row-major with axis 0 most significant.
pub fn grid_cell(point: &[f64], cuts: &[Vec<f64>]) -> usize {
    let mut cell = 0;
    for (j, axis_cuts) in cuts.iter().enumerate() {
        let idx = axis_cuts.iter().filter(|&&c| point[j] >= c).count();
        cell = cell * (axis_cuts.len() + 1) + idx;
    }
    cell
}
