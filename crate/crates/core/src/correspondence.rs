//! Relations and correspondences between two finite metric spaces.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metric::{FiniteMetricSpace, ProductSpace};

/// Default cap on `left_size * right_size` for exhaustive enumeration.
pub const ENUMERATION_CAP: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RelationError {
    #[error("EmptyRelation")]
    Empty,
    #[error("IndexOutOfRange(({0},{1}) in {2}x{3})")]
    IndexOutOfRange(usize, usize, usize, usize),
    #[error("NotACorrespondence(missing left {missing_left:?}, right {missing_right:?})")]
    NotACorrespondence {
        missing_left: Vec<usize>,
        missing_right: Vec<usize>,
    },
    #[error("MismatchedAmbient({0}x{1} vs {2}x{3})")]
    MismatchedAmbient(usize, usize, usize, usize),
    #[error("EnumerationTooLarge({cells} cells > cap {cap})")]
    EnumerationTooLarge { cells: usize, cap: usize },
}

/// A nonempty set of index pairs `(i, j)` with `i < left_size`, `j < right_size`.
///
/// Pairs are kept sorted and deduplicated. When the ambient grid has at most
/// 64 cells the relation also carries its bitmask (bit `i * right_size + j`),
/// which is its canonical identity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Relation {
    pairs: Vec<(usize, usize)>,
    left_size: usize,
    right_size: usize,
    #[serde(skip)]
    mask: Option<u64>,
}

impl Relation {
    pub fn new(
        mut pairs: Vec<(usize, usize)>,
        left_size: usize,
        right_size: usize,
    ) -> Result<Self, RelationError> {
        if pairs.is_empty() {
            return Err(RelationError::Empty);
        }
        if let Some(&(i, j)) = pairs.iter().find(|&&(i, j)| i >= left_size || j >= right_size) {
            return Err(RelationError::IndexOutOfRange(i, j, left_size, right_size));
        }
        pairs.sort_unstable();
        pairs.dedup();
        let mask = (left_size * right_size <= 64)
            .then(|| pairs.iter().fold(0u64, |m, &(i, j)| m | 1 << (i * right_size + j)));
        Ok(Relation { pairs, left_size, right_size, mask })
    }

    /// Decode a bitmask over a `left_size x right_size` grid.
    pub fn from_mask(mask: u64, left_size: usize, right_size: usize) -> Result<Self, RelationError> {
        let cells = left_size * right_size;
        if cells > 64 {
            return Err(RelationError::EnumerationTooLarge { cells, cap: 64 });
        }
        let pairs = (0..cells)
            .filter(|b| mask >> b & 1 == 1)
            .map(|b| (b / right_size, b % right_size))
            .collect();
        Relation::new(pairs, left_size, right_size)
    }

    /// The full product `left x right`.
    pub fn full(left_size: usize, right_size: usize) -> Result<Self, RelationError> {
        let pairs = (0..left_size).flat_map(|i| (0..right_size).map(move |j| (i, j))).collect();
        Relation::new(pairs, left_size, right_size)
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn left_size(&self) -> usize {
        self.left_size
    }

    pub fn right_size(&self) -> usize {
        self.right_size
    }

    pub fn mask(&self) -> Option<u64> {
        self.mask
    }

    /// Sorted distinct first coordinates.
    pub fn left_projection(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.pairs.iter().map(|p| p.0).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Sorted distinct second coordinates.
    pub fn right_projection(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.pairs.iter().map(|p| p.1).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// The same relation seen from the other side.
    pub fn transpose(&self) -> Relation {
        let pairs = self.pairs.iter().map(|&(i, j)| (j, i)).collect();
        Relation::new(pairs, self.right_size, self.left_size).expect("transpose of a valid relation")
    }

    fn check_fits(&self, left: &FiniteMetricSpace, right: &FiniteMetricSpace) -> Result<(), RelationError> {
        if self.left_size != left.len() || self.right_size != right.len() {
            return Err(RelationError::MismatchedAmbient(
                self.left_size,
                self.right_size,
                left.len(),
                right.len(),
            ));
        }
        Ok(())
    }
}

/// Result of [`is_correspondence`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coverage {
    pub missing_left: Vec<usize>,
    pub missing_right: Vec<usize>,
}

impl Coverage {
    pub fn is_correspondence(&self) -> bool {
        self.missing_left.is_empty() && self.missing_right.is_empty()
    }
}

/// Which indices, if any, the relation leaves uncovered on each side.
pub fn is_correspondence(r: &Relation) -> Coverage {
    let mut left = vec![false; r.left_size];
    let mut right = vec![false; r.right_size];
    for &(i, j) in &r.pairs {
        left[i] = true;
        right[j] = true;
    }
    let missing = |v: Vec<bool>| v.iter().enumerate().filter(|(_, &c)| !c).map(|(k, _)| k).collect();
    Coverage { missing_left: missing(left), missing_right: missing(right) }
}

/// A relation whose projections are both surjective.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct Correspondence(Relation);

impl Correspondence {
    pub fn new(pairs: Vec<(usize, usize)>, left_size: usize, right_size: usize) -> Result<Self, RelationError> {
        Relation::new(pairs, left_size, right_size)?.try_into()
    }

    /// `{(i, i)}` on a space of size `n`.
    pub fn identity(n: usize) -> Self {
        Correspondence::new((0..n).map(|i| (i, i)).collect(), n, n).expect("identity is a correspondence")
    }

    pub fn relation(&self) -> &Relation {
        &self.0
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        self.0.pairs()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn left_size(&self) -> usize {
        self.0.left_size
    }

    pub fn right_size(&self) -> usize {
        self.0.right_size
    }

    pub fn transpose(&self) -> Correspondence {
        Correspondence(self.0.transpose())
    }
}

impl TryFrom<Relation> for Correspondence {
    type Error = RelationError;

    fn try_from(r: Relation) -> Result<Self, Self::Error> {
        let cov = is_correspondence(&r);
        if cov.is_correspondence() {
            Ok(Correspondence(r))
        } else {
            Err(RelationError::NotACorrespondence {
                missing_left: cov.missing_left,
                missing_right: cov.missing_right,
            })
        }
    }
}

impl From<Correspondence> for Relation {
    fn from(c: Correspondence) -> Relation {
        c.0
    }
}

impl AsRef<Relation> for Correspondence {
    fn as_ref(&self) -> &Relation {
        &self.0
    }
}

/// Distortion of a relation: the largest `|d_X(x, x') - d_Y(y, y')|` over
/// pairs of pairs. Runs in `O(|R|^2)` over unordered pair-pairs; the
/// diagonal terms are zero.
pub fn distortion(left: &FiniteMetricSpace, right: &FiniteMetricSpace, r: &Relation) -> Result<f64, RelationError> {
    r.check_fits(left, right)?;
    Ok(distortion_of_pairs(left, right, r.pairs()))
}

pub(crate) fn distortion_of_pairs(left: &FiniteMetricSpace, right: &FiniteMetricSpace, pairs: &[(usize, usize)]) -> f64 {
    let mut worst = 0.0f64;
    for (k, &(x, y)) in pairs.iter().enumerate() {
        for &(xx, yy) in &pairs[k + 1..] {
            worst = worst.max((left.d(x, xx) - right.d(y, yy)).abs());
        }
    }
    worst
}

/// Hausdorff distance between two relations inside `X x Y` under the max metric.
pub fn hausdorff_relation_distance(p: &ProductSpace<'_>, r: &Relation, s: &Relation) -> Result<f64, RelationError> {
    r.check_fits(p.left, p.right)?;
    s.check_fits(p.left, p.right)?;
    Ok(directed_hausdorff(p, r, s).max(directed_hausdorff(p, s, r)))
}

/// `sup_{a in from} inf_{b in to} delta(a, b)`.
pub fn directed_hausdorff(p: &ProductSpace<'_>, from: &Relation, to: &Relation) -> f64 {
    from.pairs()
        .iter()
        .map(|&a| to.pairs().iter().map(|&b| p.delta(a, b)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

/// Every correspondence on a `left_size x right_size` grid, in increasing
/// bitmask order.
pub fn enumerate_correspondences(left_size: usize, right_size: usize) -> Result<Correspondences, RelationError> {
    enumerate_correspondences_capped(left_size, right_size, ENUMERATION_CAP)
}

pub fn enumerate_correspondences_capped(
    left_size: usize,
    right_size: usize,
    cap: usize,
) -> Result<Correspondences, RelationError> {
    let cells = left_size * right_size;
    if cells > cap || cells > 63 || cells == 0 {
        return Err(RelationError::EnumerationTooLarge { cells, cap });
    }
    let row = (1u64 << right_size) - 1;
    let col = (0..left_size).fold(0u64, |m, i| m | 1 << (i * right_size));
    Ok(Correspondences {
        left_size,
        right_size,
        next: 1,
        end: 1u64 << cells,
        rows: (0..left_size).map(|i| row << (i * right_size)).collect(),
        cols: (0..right_size).map(|j| col << j).collect(),
    })
}

/// Iterator returned by [`enumerate_correspondences`].
#[derive(Debug, Clone)]
pub struct Correspondences {
    left_size: usize,
    right_size: usize,
    next: u64,
    end: u64,
    rows: Vec<u64>,
    cols: Vec<u64>,
}

impl Iterator for Correspondences {
    type Item = Correspondence;

    fn next(&mut self) -> Option<Correspondence> {
        while self.next < self.end {
            let m = self.next;
            self.next += 1;
            if self.rows.iter().all(|&r| m & r != 0) && self.cols.iter().all(|&c| m & c != 0) {
                let rel = Relation::from_mask(m, self.left_size, self.right_size).expect("nonzero mask");
                return Some(Correspondence(rel));
            }
        }
        None
    }
}

/// `{(r, r) : r in R}` as a correspondence between two copies of `R`, where
/// point `k` of each copy is the `k`-th pair of `R`.
pub fn diagonal_relation(r: &Correspondence) -> Correspondence {
    Correspondence::identity(r.len())
}

#[derive(Serialize, Deserialize)]
struct CorrespondenceRepr {
    pairs: Vec<(usize, usize)>,
    left_size: usize,
    right_size: usize,
}

impl<'de> Deserialize<'de> for Relation {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let r = CorrespondenceRepr::deserialize(de)?;
        Relation::new(r.pairs, r.left_size, r.right_size).map_err(serde::de::Error::custom)
    }
}

impl<'de> Deserialize<'de> for Correspondence {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let r = Relation::deserialize(de)?;
        Correspondence::try_from(r).map_err(serde::de::Error::custom)
    }
}
