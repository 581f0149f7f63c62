//! Finite metric spaces.
//!
//! A [`FiniteMetricSpace`] is an `n x n` distance matrix that has passed
//! [`validate_metric`]. Everything downstream (correspondences, the solver,
//! interpolated spaces) assumes the axioms hold, so the only way to build one
//! from raw numbers is through validation.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default validation tolerance.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Default strictness margin used by [`epsilon_net`].
pub const DEFAULT_NET_MARGIN: f64 = 1e-6;

/// Largest space accepted by [`CoverMode::Exact`].
pub const EXACT_COVER_CAP: usize = 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("NotSquare(rows={rows}, row {row} has {len} entries)")]
    NotSquare { rows: usize, row: usize, len: usize },
    #[error("EmptyMatrix")]
    EmptyMatrix,
    #[error("NonFinite({0},{1})")]
    NonFinite(usize, usize),
    #[error("AsymmetryExceedsTol({0},{1})")]
    AsymmetryExceedsTol(usize, usize),
    #[error("NegativeEntry({0},{1})")]
    NegativeEntry(usize, usize),
    #[error("NonzeroDiagonal({0})")]
    NonzeroDiagonal(usize),
    #[error("ZeroOffDiagonal({0},{1})")]
    ZeroOffDiagonal(usize, usize),
    /// `d(i, j) > d(i, via) + d(via, j) + tol`.
    #[error("TriangleViolation({i},{j},{via} slack={slack})")]
    TriangleViolation {
        i: usize,
        j: usize,
        via: usize,
        slack: f64,
    },
    #[error("LabelCount(expected {expected}, got {got})")]
    LabelCount { expected: usize, got: usize },
    #[error("NonPositiveEps({0})")]
    NonPositiveEps(f64),
    #[error("ExactModeTooLarge({0})")]
    ExactModeTooLarge(usize),
    #[error("EmptySubset")]
    EmptySubset,
    #[error("IndexOutOfRange({index} >= {len})")]
    IndexOutOfRange { index: usize, len: usize },
}

/// A validated finite metric space.
///
/// Distances are stored row-major. The matrix is exactly symmetric with an
/// exactly zero diagonal, so downstream code may compare computed quantities
/// with `==`.
#[derive(Clone, PartialEq, Serialize)]
pub struct FiniteMetricSpace {
    n: usize,
    dist: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl fmt::Debug for FiniteMetricSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FiniteMetricSpace")
            .field("n", &self.n)
            .field("dist", &self.rows().collect::<Vec<_>>())
            .finish()
    }
}

/// Validate a square matrix against the metric axioms.
///
/// Asymmetry up to `tol` is repaired by replacing the matrix with
/// `(A + A^T) / 2`; diagonal entries within `tol` of zero are stored as zero.
/// Every other violation is reported with the offending indices, checked in
/// the order: shape, finiteness, symmetry, diagonal, sign, point identity,
/// triangle inequality.
pub fn validate_metric(matrix: &[Vec<f64>], tol: f64) -> Result<FiniteMetricSpace, MetricError> {
    let n = matrix.len();
    if n == 0 {
        return Err(MetricError::EmptyMatrix);
    }
    for (row, r) in matrix.iter().enumerate() {
        if r.len() != n {
            return Err(MetricError::NotSquare { rows: n, row, len: r.len() });
        }
    }
    for i in 0..n {
        for j in 0..n {
            if !matrix[i][j].is_finite() {
                return Err(MetricError::NonFinite(i, j));
            }
        }
    }
    let mut asym = false;
    for i in 0..n {
        for j in (i + 1)..n {
            let gap = (matrix[i][j] - matrix[j][i]).abs();
            if gap > tol {
                return Err(MetricError::AsymmetryExceedsTol(i, j));
            }
            asym |= gap > 0.0;
        }
    }
    let mut dist = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let v = if asym && i != j {
                (matrix[i][j] + matrix[j][i]) / 2.0
            } else {
                matrix[i][j]
            };
            dist.push(v);
        }
    }
    check_axioms(n, &mut dist, tol)?;
    Ok(FiniteMetricSpace { n, dist, labels: None })
}

fn check_axioms(n: usize, dist: &mut [f64], tol: f64) -> Result<(), MetricError> {
    for i in 0..n {
        if dist[i * n + i].abs() > tol {
            return Err(MetricError::NonzeroDiagonal(i));
        }
        dist[i * n + i] = 0.0;
    }
    for i in 0..n {
        for j in 0..n {
            if dist[i * n + j] < -tol {
                return Err(MetricError::NegativeEntry(i, j));
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            if i != j && dist[i * n + j] <= 0.0 {
                return Err(MetricError::ZeroOffDiagonal(i, j));
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            let direct = dist[i * n + j];
            for via in 0..n {
                let detour = dist[i * n + via] + dist[via * n + j];
                if direct > detour + tol {
                    return Err(MetricError::TriangleViolation {
                        i,
                        j,
                        via,
                        slack: direct - detour,
                    });
                }
            }
        }
    }
    Ok(())
}

impl FiniteMetricSpace {
    /// Validate and attach labels.
    pub fn with_labels(
        matrix: &[Vec<f64>],
        labels: Option<Vec<String>>,
        tol: f64,
    ) -> Result<Self, MetricError> {
        let space = validate_metric(matrix, tol)?;
        match labels {
            Some(l) => space.relabel(l),
            None => Ok(space),
        }
    }

    /// The one-point space.
    pub fn singleton() -> Self {
        FiniteMetricSpace { n: 1, dist: vec![0.0], labels: None }
    }

    pub fn relabel(mut self, labels: Vec<String>) -> Result<Self, MetricError> {
        if labels.len() != self.n {
            return Err(MetricError::LabelCount { expected: self.n, got: labels.len() });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Number of points.
    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    /// Always false; a metric space has at least one point.
    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.dist[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.dist.chunks(self.n)
    }

    pub fn to_matrix(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Label of point `i`, falling back to its index.
    pub fn label(&self, i: usize) -> String {
        match &self.labels {
            Some(l) => l[i].clone(),
            None => i.to_string(),
        }
    }

    /// Largest distance from `i` to any point.
    pub fn eccentricity(&self, i: usize) -> f64 {
        self.row(i).iter().copied().fold(0.0, f64::max)
    }

    /// Smallest distance between distinct points, or `None` for one point.
    pub fn min_positive_distance(&self) -> Option<f64> {
        let mut best: Option<f64> = None;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let v = self.d(i, j);
                best = Some(best.map_or(v, |b| b.min(v)));
            }
        }
        best
    }

    /// Multiply every distance by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        assert!(factor > 0.0 && factor.is_finite(), "scale factor must be positive");
        FiniteMetricSpace {
            n: self.n,
            dist: self.dist.iter().map(|v| v * factor).collect(),
            labels: self.labels.clone(),
        }
    }

    /// Relabel points: point `i` of the result is point `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self, MetricError> {
        if perm.len() != self.n {
            return Err(MetricError::LabelCount { expected: self.n, got: perm.len() });
        }
        let mut seen = vec![false; self.n];
        for &p in perm {
            if p >= self.n || seen[p] {
                return Err(MetricError::IndexOutOfRange { index: p, len: self.n });
            }
            seen[p] = true;
        }
        Ok(self.pick(perm))
    }

    fn pick(&self, idx: &[usize]) -> Self {
        let m = idx.len();
        let mut dist = Vec::with_capacity(m * m);
        for &a in idx {
            for &b in idx {
                dist.push(self.d(a, b));
            }
        }
        FiniteMetricSpace {
            n: m,
            dist,
            labels: self.labels.as_ref().map(|l| idx.iter().map(|&i| l[i].clone()).collect()),
        }
    }

    /// Build from a matrix that is a metric by construction (for example a
    /// convex combination of two metrics), skipping validation of the
    /// triangle inequality. Debug builds still run every check at `tol`.
    pub(crate) fn from_trusted(n: usize, dist: Vec<f64>, labels: Option<Vec<String>>, tol: f64) -> Self {
        debug_assert_eq!(dist.len(), n * n);
        if cfg!(debug_assertions) {
            let mut copy = dist.clone();
            check_axioms(n, &mut copy, tol).expect("trusted matrix violates the metric axioms");
        }
        FiniteMetricSpace { n, dist, labels }
    }
}

/// Largest pairwise distance. Zero for a single point.
pub fn diameter(space: &FiniteMetricSpace) -> f64 {
    space.dist.iter().copied().fold(0.0, f64::max)
}

/// Induced subspace on `subset`, in the given order, keeping labels.
pub fn restrict(space: &FiniteMetricSpace, subset: &[usize]) -> Result<FiniteMetricSpace, MetricError> {
    if subset.is_empty() {
        return Err(MetricError::EmptySubset);
    }
    let mut seen = vec![false; space.n];
    for &i in subset {
        if i >= space.n {
            return Err(MetricError::IndexOutOfRange { index: i, len: space.n });
        }
        if seen[i] {
            // a repeated index would create a zero off-diagonal entry
            return Err(MetricError::ZeroOffDiagonal(i, i));
        }
        seen[i] = true;
    }
    Ok(space.pick(subset))
}

/// Greedy farthest-point net with the default margin.
pub fn epsilon_net(space: &FiniteMetricSpace, eps: f64) -> Result<Vec<usize>, MetricError> {
    epsilon_net_with_margin(space, eps, DEFAULT_NET_MARGIN)
}

/// Greedy farthest-point net: every point ends up within `eps * (1 - margin)`
/// of the returned set.
///
/// Seeds at index 0, then repeatedly adds the point farthest from the current
/// set (lowest index on ties) while that distance exceeds the covering radius.
/// The result is sorted by insertion order, so index 0 always comes first.
pub fn epsilon_net_with_margin(
    space: &FiniteMetricSpace,
    eps: f64,
    margin: f64,
) -> Result<Vec<usize>, MetricError> {
    if !(eps > 0.0) {
        return Err(MetricError::NonPositiveEps(eps));
    }
    let radius = eps * (1.0 - margin);
    let mut net = vec![0];
    let mut gap: Vec<f64> = space.row(0).to_vec();
    loop {
        let mut far = 0;
        for i in 1..space.n {
            if gap[i] > gap[far] {
                far = i;
            }
        }
        if gap[far] <= radius {
            return Ok(net);
        }
        net.push(far);
        for (g, &d) in gap.iter_mut().zip(space.row(far)) {
            *g = g.min(d);
        }
    }
}

/// Largest distance from a point of the space to its nearest point of `subset`.
pub fn covering_radius(space: &FiniteMetricSpace, subset: &[usize]) -> f64 {
    (0..space.n)
        .map(|i| subset.iter().map(|&s| space.d(i, s)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

/// Hausdorff distance between two nonempty index sets of one space.
pub fn hausdorff_subsets(space: &FiniteMetricSpace, a: &[usize], b: &[usize]) -> f64 {
    let directed = |from: &[usize], to: &[usize]| {
        from.iter()
            .map(|&p| to.iter().map(|&q| space.d(p, q)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoverMode {
    /// Exhaustive search over center sets by increasing size.
    Exact,
    /// Greedy set cover; an upper bound on the exact count.
    Greedy,
}

/// Number of closed `eps`-balls centered at points of the space needed to
/// cover it.
pub fn covering_number(space: &FiniteMetricSpace, eps: f64, mode: CoverMode) -> Result<usize, MetricError> {
    if !(eps > 0.0) {
        return Err(MetricError::NonPositiveEps(eps));
    }
    let n = space.n;
    let balls: Vec<Vec<bool>> = (0..n)
        .map(|c| (0..n).map(|p| space.d(c, p) <= eps).collect())
        .collect();
    match mode {
        CoverMode::Exact => {
            if n > EXACT_COVER_CAP {
                return Err(MetricError::ExactModeTooLarge(n));
            }
            let masks: Vec<u32> = balls
                .iter()
                .map(|b| b.iter().enumerate().filter(|(_, &c)| c).fold(0u32, |m, (p, _)| m | 1 << p))
                .collect();
            let full = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
            (1..=n)
                .find(|&k| covers_with(&masks, full, k, 0, 0))
                .ok_or(MetricError::EmptySubset)
        }
        CoverMode::Greedy => {
            let mut covered = vec![false; n];
            let mut count = 0;
            while covered.iter().any(|c| !c) {
                let best = (0..n)
                    .max_by_key(|&c| {
                        let gain = (0..n).filter(|&p| balls[c][p] && !covered[p]).count();
                        (gain, std::cmp::Reverse(c))
                    })
                    .expect("nonempty space");
                for p in 0..n {
                    covered[p] |= balls[best][p];
                }
                count += 1;
            }
            Ok(count)
        }
    }
}

fn covers_with(masks: &[u32], full: u32, k: usize, start: usize, acc: u32) -> bool {
    if acc == full {
        return true;
    }
    if k == 0 {
        return false;
    }
    (start..masks.len()).any(|c| covers_with(masks, full, k - 1, c + 1, acc | masks[c]))
}

/// `X x Y` under the max metric, evaluated on demand.
#[derive(Debug, Clone, Copy)]
pub struct ProductSpace<'a> {
    pub left: &'a FiniteMetricSpace,
    pub right: &'a FiniteMetricSpace,
}

pub fn product_space<'a>(left: &'a FiniteMetricSpace, right: &'a FiniteMetricSpace) -> ProductSpace<'a> {
    ProductSpace { left, right }
}

impl ProductSpace<'_> {
    #[inline]
    pub fn delta(&self, a: (usize, usize), b: (usize, usize)) -> f64 {
        self.left.d(a.0, b.0).max(self.right.d(a.1, b.1))
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.left.len(), self.right.len())
    }
}

#[derive(Deserialize)]
struct SpaceRepr {
    #[serde(default)]
    labels: Option<Vec<String>>,
    dist: Vec<Vec<f64>>,
}

impl<'de> Deserialize<'de> for FiniteMetricSpace {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let repr = SpaceRepr::deserialize(de)?;
        FiniteMetricSpace::with_labels(&repr.dist, repr.labels, DEFAULT_TOL).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
pub(crate) fn line(points: &[f64]) -> FiniteMetricSpace {
    let m: Vec<Vec<f64>> = points.iter().map(|a| points.iter().map(|b| (a - b).abs()).collect()).collect();
    validate_metric(&m, DEFAULT_TOL).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_space_validates() {
        let s = validate_metric(&[vec![0.0, 2.0], vec![2.0, 0.0]], 1e-9).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.d(0, 1), 2.0);
    }

    #[test]
    fn nonzero_diagonal_is_reported() {
        let err = validate_metric(&[vec![0.0, 1.0], vec![1.0, 0.5]], 1e-9).unwrap_err();
        assert_eq!(err, MetricError::NonzeroDiagonal(1));
    }

    #[test]
    fn triangle_violation_names_the_triple() {
        let m = vec![vec![0.0, 1.0, 3.0], vec![1.0, 0.0, 1.0], vec![3.0, 1.0, 0.0]];
        let err = validate_metric(&m, 1e-9).unwrap_err();
        assert_eq!(err, MetricError::TriangleViolation { i: 0, j: 2, via: 1, slack: 1.0 });
        assert_eq!(err.to_string(), "TriangleViolation(0,2,1 slack=1)");
    }

    #[test]
    fn shape_and_sign_errors() {
        assert_eq!(
            validate_metric(&[vec![0.0, 1.0], vec![1.0]], 1e-9).unwrap_err(),
            MetricError::NotSquare { rows: 2, row: 1, len: 1 }
        );
        assert_eq!(
            validate_metric(&[vec![0.0, 1.0], vec![1.5, 0.0]], 1e-9).unwrap_err(),
            MetricError::AsymmetryExceedsTol(0, 1)
        );
        assert_eq!(
            validate_metric(&[vec![0.0, -1.0], vec![-1.0, 0.0]], 1e-9).unwrap_err(),
            MetricError::NegativeEntry(0, 1)
        );
        assert_eq!(
            validate_metric(&[vec![0.0, 0.0], vec![0.0, 0.0]], 1e-9).unwrap_err(),
            MetricError::ZeroOffDiagonal(0, 1)
        );
        assert_eq!(
            validate_metric(&[vec![0.0, f64::NAN], vec![1.0, 0.0]], 1e-9).unwrap_err(),
            MetricError::NonFinite(0, 1)
        );
    }

    #[test]
    fn small_asymmetry_is_symmetrized() {
        let s = validate_metric(&[vec![0.0, 1.0], vec![1.0 + 1e-10, 0.0]], 1e-9).unwrap();
        assert_eq!(s.d(0, 1), s.d(1, 0));
    }

    #[test]
    fn diameters() {
        assert_eq!(diameter(&FiniteMetricSpace::singleton()), 0.0);
        assert_eq!(diameter(&line(&[0.0, 2.0])), 2.0);
        assert_eq!(diameter(&line(&[0.0, 1.0, 2.0])), 2.0);
    }

    #[test]
    fn net_examples() {
        let x = line(&[0.0, 1.0, 2.0]);
        assert_eq!(epsilon_net(&x, 5.0).unwrap(), vec![0]);
        assert_eq!(epsilon_net_with_margin(&x, 1.2, 0.0).unwrap(), vec![0, 2]);
        assert_eq!(epsilon_net(&x, -1.0).unwrap_err(), MetricError::NonPositiveEps(-1.0));
        assert_eq!(epsilon_net(&FiniteMetricSpace::singleton(), 1e-6).unwrap(), vec![0]);
    }

    #[test]
    fn covering_examples() {
        let x = line(&[0.0, 1.0, 2.0]);
        assert_eq!(covering_number(&x, 1.5, CoverMode::Exact).unwrap(), 1);
        assert_eq!(covering_number(&x, 0.5, CoverMode::Exact).unwrap(), 3);
        // exact search finds the middle ball; greedy does too here
        assert_eq!(covering_number(&x, 1.0, CoverMode::Greedy).unwrap(), 1);
        let big = line(&(0..17).map(f64::from).collect::<Vec<_>>());
        assert_eq!(covering_number(&big, 1.0, CoverMode::Exact).unwrap_err(), MetricError::ExactModeTooLarge(17));
        assert!(covering_number(&big, 1.0, CoverMode::Greedy).is_ok());
    }

    #[test]
    fn product_metric_examples() {
        let x = line(&[0.0, 2.0]);
        let y = line(&[0.0, 4.0]);
        let p = product_space(&x, &y);
        assert_eq!(p.delta((0, 0), (1, 1)), 4.0);
        for a in 0..2 {
            for b in 0..2 {
                assert_eq!(p.delta((a, b), (a, b)), 0.0);
            }
        }
    }

    #[test]
    fn restrict_examples() {
        let x = line(&[0.0, 1.0, 2.0]);
        assert_eq!(restrict(&x, &[0, 1, 2]).unwrap(), x);
        assert_eq!(restrict(&x, &[0, 2]).unwrap().to_matrix(), vec![vec![0.0, 2.0], vec![2.0, 0.0]]);
        assert_eq!(restrict(&x, &[]).unwrap_err(), MetricError::EmptySubset);
        assert_eq!(restrict(&x, &[3]).unwrap_err(), MetricError::IndexOutOfRange { index: 3, len: 3 });
    }

    #[test]
    fn restrict_keeps_labels() {
        let x = line(&[0.0, 1.0, 2.0]).relabel(vec!["a".into(), "b".into(), "c".into()]).unwrap();
        let sub = restrict(&x, &[2, 0]).unwrap();
        assert_eq!(sub.labels().unwrap(), &["c".to_string(), "a".to_string()]);
    }
}
