//! Interpolated spaces along an optimal correspondence.
//!
//! For a correspondence `R` between `X` and `Y` and `t` in `(0, 1)`, the
//! interpolant `gamma_R(t)` is the point set `R` with distance
//! `(1 - t) d_X(x, x') + t d_Y(y, y')`. The endpoints are `X` and `Y`
//! themselves. When `R` is optimal the curve is a geodesic for `d_GH`; this
//! module builds the interpolants and checks that identity cell by cell.

use serde::Serialize;
use thiserror::Error;

use crate::correspondence::{
    distortion, distortion_of_pairs, is_correspondence, Correspondence, Relation, RelationError,
};
use crate::metric::FiniteMetricSpace;
use crate::parallel::map_indexed;
use crate::solver::{enumerate_optimal, exact_gh_with, GHResult, SolverError, SolverOptions};

/// Slack allowed by the optimality check.
pub const OPTIMALITY_TOL: f64 = 1e-9;

/// Default per-cell tolerance in a [`GeodesicReport`].
pub const REPORT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeodesicError {
    #[error("TOutOfRange({0})")]
    TOutOfRange(f64),
    #[error("NotACorrespondence(missing left {missing_left:?}, right {missing_right:?})")]
    NotACorrespondence {
        missing_left: Vec<usize>,
        missing_right: Vec<usize>,
    },
    #[error("RNotOptimal(dis={distortion}, 2*d_GH={two_dgh})")]
    RNotOptimal { distortion: f64, two_dgh: f64 },
    #[error("TimesMalformed({0})")]
    TimesMalformed(String),
    #[error(transparent)]
    Relation(#[from] RelationError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// `gamma_R(t)` together with where it came from.
#[derive(Debug, Clone)]
pub struct InterpolatedSpace<'a> {
    pub source_left: &'a FiniteMetricSpace,
    pub source_right: &'a FiniteMetricSpace,
    pub correspondence: &'a Correspondence,
    pub t: f64,
    pub realized: FiniteMetricSpace,
}

fn check_shape(x: &FiniteMetricSpace, y: &FiniteMetricSpace, r: &Relation) -> Result<(), GeodesicError> {
    if r.left_size() != x.len() || r.right_size() != y.len() {
        return Err(RelationError::MismatchedAmbient(r.left_size(), r.right_size(), x.len(), y.len()).into());
    }
    let cov = is_correspondence(r);
    if !cov.is_correspondence() {
        return Err(GeodesicError::NotACorrespondence {
            missing_left: cov.missing_left,
            missing_right: cov.missing_right,
        });
    }
    Ok(())
}

fn check_t(t: f64) -> Result<(), GeodesicError> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(GeodesicError::TOutOfRange(t))
    }
}

fn check_open(t: f64) -> Result<(), GeodesicError> {
    if t > 0.0 && t < 1.0 {
        Ok(())
    } else {
        Err(GeodesicError::TOutOfRange(t))
    }
}

/// Distance matrix of `gamma_R(t)` on the pairs of `R`, row-major.
fn interpolated_matrix(x: &FiniteMetricSpace, y: &FiniteMetricSpace, pairs: &[(usize, usize)], t: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(pairs.len() * pairs.len());
    for &(a, b) in pairs {
        for &(aa, bb) in pairs {
            out.push((1.0 - t) * x.d(a, aa) + t * y.d(b, bb));
        }
    }
    out
}

/// Build `gamma_R(t)`. Any correspondence is accepted; the geodesic
/// property needs `R` optimal, the metric axioms do not.
pub fn geodesic_point<'a>(
    x: &'a FiniteMetricSpace,
    y: &'a FiniteMetricSpace,
    r: &'a Correspondence,
    t: f64,
) -> Result<InterpolatedSpace<'a>, GeodesicError> {
    check_t(t)?;
    check_shape(x, y, r.relation())?;
    let realized = realize(x, y, r, t);
    Ok(InterpolatedSpace { source_left: x, source_right: y, correspondence: r, t, realized })
}

fn realize(x: &FiniteMetricSpace, y: &FiniteMetricSpace, r: &Correspondence, t: f64) -> FiniteMetricSpace {
    if t == 0.0 {
        return x.clone();
    }
    if t == 1.0 {
        return y.clone();
    }
    let labels = r.pairs().iter().map(|&(a, b)| pair_label(x, y, a, b)).collect();
    // A convex combination of two metrics on R is a metric, and distinct
    // pairs differ in at least one coordinate.
    FiniteMetricSpace::from_trusted(r.len(), interpolated_matrix(x, y, r.pairs(), t), Some(labels), 1e-9)
}

fn pair_label(x: &FiniteMetricSpace, y: &FiniteMetricSpace, a: usize, b: usize) -> String {
    match (x.labels(), y.labels()) {
        (Some(lx), Some(ly)) => format!("({}, {})", lx[a], ly[b]),
        _ => format!("(x{a}, y{b})"),
    }
}

/// A computed distortion next to its closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub computed: f64,
    pub predicted: f64,
}

impl IdentityCheck {
    pub fn agrees(&self, tol: f64) -> bool {
        (self.computed - self.predicted).abs() <= tol
    }
}

/// How to establish that `R` is optimal before an identity check.
#[derive(Debug, Clone, Copy)]
pub enum Optimality {
    /// `d_GH(X, Y)` is already known.
    Known(f64),
    /// Solve for `d_GH(X, Y)` with this budget.
    Solve(u64),
}

fn require_optimal(
    x: &FiniteMetricSpace,
    y: &FiniteMetricSpace,
    r: &Correspondence,
    how: Optimality,
) -> Result<f64, GeodesicError> {
    let dis = distortion(x, y, r.relation())?;
    let dgh = match how {
        Optimality::Known(d) => d,
        Optimality::Solve(budget) => {
            let res = exact_gh_with(x, y, &SolverOptions::with_budget(budget));
            // an inexact solve only knows d_GH >= lower bound
            if res.exact { res.distance } else { res.lower_bound }
        }
    };
    if dis > 2.0 * dgh + OPTIMALITY_TOL {
        return Err(GeodesicError::RNotOptimal { distortion: dis, two_dgh: 2.0 * dgh });
    }
    Ok(dis)
}

/// Distortion of the diagonal correspondence between `gamma_R(s)` and
/// `gamma_R(t)`, against `|t - s| dis(R)`. Holds for every correspondence.
pub fn diagonal_distortion(
    x: &FiniteMetricSpace,
    y: &FiniteMetricSpace,
    r: &Correspondence,
    s: f64,
    t: f64,
) -> Result<IdentityCheck, GeodesicError> {
    check_open(s)?;
    check_open(t)?;
    check_shape(x, y, r.relation())?;
    let a = interpolated_matrix(x, y, r.pairs(), s);
    let b = interpolated_matrix(x, y, r.pairs(), t);
    let computed = a.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    let predicted = (t - s).abs() * distortion_of_pairs(x, y, r.pairs());
    Ok(IdentityCheck { computed, predicted })
}

/// [`diagonal_distortion`] after confirming `R` is optimal, so that the
/// prediction equals `2 |t - s| d_GH(X, Y)`.
pub fn diagonal_distortion_identity(
    x: &FiniteMetricSpace,
    y: &FiniteMetricSpace,
    r: &Correspondence,
    s: f64,
    t: f64,
    how: Optimality,
) -> Result<IdentityCheck, GeodesicError> {
    check_shape(x, y, r.relation())?;
    require_optimal(x, y, r, how)?;
    diagonal_distortion(x, y, r, s, t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// Distortion of the endpoint correspondence between `X` (or `Y`) and
/// `gamma_R(t)`, which pairs `x` with every `(x, y)` in `R`. Predicted value:
/// `t dis(R)` on the left, `(1 - t) dis(R)` on the right.
pub fn endpoint_distortion(
    x: &FiniteMetricSpace,
    y: &FiniteMetricSpace,
    r: &Correspondence,
    t: f64,
    side: Side,
) -> Result<IdentityCheck, GeodesicError> {
    check_open(t)?;
    check_shape(x, y, r.relation())?;
    let mid = interpolated_matrix(x, y, r.pairs(), t);
    let k = r.len();
    let mut computed = 0.0f64;
    for (p, &(a, b)) in r.pairs().iter().enumerate() {
        for (q, &(aa, bb)) in r.pairs().iter().enumerate() {
            let end = match side {
                Side::Left => x.d(a, aa),
                Side::Right => y.d(b, bb),
            };
            computed = computed.max((end - mid[p * k + q]).abs());
        }
    }
    let dis = distortion_of_pairs(x, y, r.pairs());
    let predicted = match side {
        Side::Left => t * dis,
        Side::Right => (1.0 - t) * dis,
    };
    Ok(IdentityCheck { computed, predicted })
}

/// [`endpoint_distortion`] after confirming `R` is optimal.
pub fn endpoint_distortion_identity(
    x: &FiniteMetricSpace,
    y: &FiniteMetricSpace,
    r: &Correspondence,
    t: f64,
    side: Side,
    how: Optimality,
) -> Result<IdentityCheck, GeodesicError> {
    check_shape(x, y, r.relation())?;
    require_optimal(x, y, r, how)?;
    endpoint_distortion(x, y, r, t, side)
}

/// The endpoint correspondence as an explicit relation between `X` (or `Y`)
/// and the points of `gamma_R(t)`.
pub fn endpoint_correspondence(r: &Correspondence, side: Side) -> Correspondence {
    let pairs = r
        .pairs()
        .iter()
        .enumerate()
        .map(|(k, &(a, b))| match side {
            Side::Left => (a, k),
            Side::Right => (b, k),
        })
        .collect();
    let size = match side {
        Side::Left => r.left_size(),
        Side::Right => r.right_size(),
    };
    Correspondence::new(pairs, size, r.len()).expect("endpoint relation covers both sides")
}

/// One `(s, t)` comparison in a [`GeodesicReport`].
#[derive(Debug, Clone, Serialize)]
pub struct GeodesicCell {
    pub s: f64,
    pub t: f64,
    /// Solver distance (its upper bound when inexact).
    pub computed: f64,
    pub lower: f64,
    pub upper: f64,
    pub exact: bool,
    /// `|t - s| d_GH(X, Y)`.
    pub target: f64,
    /// Half the distortion of the constructive correspondence (diagonal,
    /// endpoint, or `R` itself); always an upper bound on the cell distance.
    pub certificate_bound: f64,
    pub nodes: u64,
}

impl GeodesicCell {
    pub fn deviation(&self) -> f64 {
        (self.computed - self.target).abs()
    }

    /// Exact cells must match the target; inexact ones must bracket it.
    pub fn passes(&self, tol: f64) -> bool {
        if self.exact {
            self.deviation() <= tol
        } else {
            self.lower - tol <= self.target && self.target <= self.upper + tol
        }
    }

    pub fn certificate_ok(&self, tol: f64) -> bool {
        self.certificate_bound <= self.target + tol
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GeodesicReport {
    pub times: Vec<f64>,
    pub dgh: f64,
    pub tolerance: f64,
    /// Cells for `s < t`, ordered by `(s, t)` index.
    pub cells: Vec<GeodesicCell>,
    pub max_deviation: f64,
    pub inexact_cells: usize,
}

impl GeodesicReport {
    pub fn all_pass(&self) -> bool {
        self.cells.iter().all(|c| c.passes(self.tolerance) && c.certificate_ok(self.tolerance))
    }

    pub fn all_exact(&self) -> bool {
        self.inexact_cells == 0
    }

    /// Symmetric matrix of cell distances, zero on the diagonal.
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        let k = self.times.len();
        let mut m = vec![vec![0.0; k]; k];
        let mut it = self.cells.iter();
        for a in 0..k {
            for b in (a + 1)..k {
                let c = it.next().expect("one cell per pair");
                m[a][b] = c.computed;
                m[b][a] = c.computed;
            }
        }
        m
    }

    /// CSV with columns `s,t,computed,target,exact`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,t,computed,target,exact\n");
        for c in &self.cells {
            out.push_str(&format!("{},{},{},{},{}\n", c.s, c.t, c.computed, c.target, c.exact));
        }
        out
    }
}

fn check_times(times: &[f64]) -> Result<(), GeodesicError> {
    if times.len() < 2 || times[0] != 0.0 || *times.last().unwrap() != 1.0 {
        return Err(GeodesicError::TimesMalformed("times must start at 0 and end at 1".into()));
    }
    if times.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(GeodesicError::TimesMalformed("times must be strictly increasing".into()));
    }
    Ok(())
}

/// Constructive upper bound on `d_GH(gamma(s), gamma(t))`.
fn certificate_bound(x: &FiniteMetricSpace, y: &FiniteMetricSpace, r: &Correspondence, s: f64, t: f64) -> f64 {
    let dis = match (s == 0.0, t == 1.0) {
        (true, true) => distortion_of_pairs(x, y, r.pairs()),
        (true, false) => endpoint_distortion(x, y, r, t, Side::Left).expect("checked inputs").computed,
        (false, true) => endpoint_distortion(x, y, r, s, Side::Right).expect("checked inputs").computed,
        (false, false) => diagonal_distortion(x, y, r, s, t).expect("checked inputs").computed,
    };
    dis / 2.0
}

/// The constructive correspondence for a cell, used to seed the solver.
fn certificate_for(r: &Correspondence, s: f64, t: f64) -> Correspondence {
    match (s == 0.0, t == 1.0) {
        (true, true) => r.clone(),
        (true, false) => endpoint_correspondence(r, Side::Left),
        (false, true) => endpoint_correspondence(r, Side::Right).transpose(),
        (false, false) => Correspondence::identity(r.len()),
    }
}

/// Compute `d_GH(gamma_R(s), gamma_R(t))` for every pair of `times` and
/// compare with `|t - s| d_GH(X, Y)`.
///
/// Each cell is solved with [`exact_gh_with`] under `opts`, seeded with its
/// constructive correspondence. Cells are independent and may run in
/// parallel; the report order does not depend on scheduling.
pub fn verify_geodesic(
    x: &FiniteMetricSpace,
    y: &FiniteMetricSpace,
    r: &Correspondence,
    times: &[f64],
    dgh: Optimality,
    opts: &SolverOptions,
) -> Result<GeodesicReport, GeodesicError> {
    check_times(times)?;
    check_shape(x, y, r.relation())?;
    let dis = require_optimal(x, y, r, dgh)?;
    let dgh = dis / 2.0;

    let mut jobs = Vec::new();
    for a in 0..times.len() {
        for b in (a + 1)..times.len() {
            jobs.push((times[a], times[b]));
        }
    }
    let cell_opts = SolverOptions { threads: 1, ..opts.clone() };
    let cells = map_indexed(&jobs, opts.threads, |&(s, t)| {
        let gs = realize(x, y, r, s);
        let gt = realize(x, y, r, t);
        let o = SolverOptions { initial: Some(certificate_for(r, s, t)), ..cell_opts.clone() };
        let res: GHResult = exact_gh_with(&gs, &gt, &o);
        GeodesicCell {
            s,
            t,
            computed: res.distance,
            lower: res.lower_bound,
            upper: res.upper_bound,
            exact: res.exact,
            target: (t - s) * dgh,
            certificate_bound: certificate_bound(x, y, r, s, t),
            nodes: res.nodes_explored,
        }
    });
    let max_deviation = cells.iter().filter(|c| c.exact).map(GeodesicCell::deviation).fold(0.0, f64::max);
    let inexact_cells = cells.iter().filter(|c| !c.exact).count();
    Ok(GeodesicReport { times: times.to_vec(), dgh, tolerance: REPORT_TOL, cells, max_deviation, inexact_cells })
}

/// Sum of `d_GH` between consecutive interpolants: a lower bound on the
/// length of the curve through `times`. Inexact solves contribute their lower
/// bound, so the sum stays a lower bound.
pub fn path_length_estimate(
    x: &FiniteMetricSpace,
    y: &FiniteMetricSpace,
    r: &Correspondence,
    times: &[f64],
    dgh: Optimality,
    opts: &SolverOptions,
) -> Result<f64, GeodesicError> {
    check_times(times)?;
    check_shape(x, y, r.relation())?;
    require_optimal(x, y, r, dgh)?;
    let steps: Vec<(f64, f64)> = times.windows(2).map(|w| (w[0], w[1])).collect();
    let cell_opts = SolverOptions { threads: 1, ..opts.clone() };
    let parts = map_indexed(&steps, opts.threads, |&(s, t)| {
        let o = SolverOptions { initial: Some(certificate_for(r, s, t)), ..cell_opts.clone() };
        let res = exact_gh_with(&realize(x, y, r, s), &realize(x, y, r, t), &o);
        if res.exact { res.distance } else { res.lower_bound }
    });
    Ok(parts.iter().sum())
}

/// Every correspondence achieving `2 d_GH(X, Y)`, in bitmask order.
pub fn optimal_set_probe(x: &FiniteMetricSpace, y: &FiniteMetricSpace) -> Result<Vec<Correspondence>, GeodesicError> {
    Ok(enumerate_optimal(x, y)?)
}
