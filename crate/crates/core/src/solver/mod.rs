//! Gromov-Hausdorff distance between finite metric spaces.
//!
//! `d_GH(X, Y)` is half the smallest distortion of a correspondence between
//! `X` and `Y`. [`brute_force_gh`] scans every correspondence and serves as the
//! oracle; [`exact_gh`] is a branch-and-bound search that scales a little
//! further and degrades to certified bounds when its node budget runs out.

mod bnb;
mod nets;

use std::time::{Duration, Instant};

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::correspondence::{
    distortion_of_pairs, enumerate_correspondences_capped, Correspondence, RelationError, ENUMERATION_CAP,
};
use crate::metric::{diameter, FiniteMetricSpace, MetricError};

pub use nets::{convergence_experiment, net_approx_gh, ConvergenceReport, ConvergenceStep, NetApprox};

/// Default node budget for [`exact_gh`].
pub const DEFAULT_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error(transparent)]
    Relation(#[from] RelationError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("ScheduleNotDecreasing(at step {0})")]
    ScheduleNotDecreasing(usize),
    #[error("EmptySchedule")]
    EmptySchedule,
}

/// Knobs for [`exact_gh_with`].
#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Maximum number of search nodes.
    pub budget: u64,
    /// Seed the incumbent with [`upper_bound_gh`].
    pub greedy_seed: bool,
    /// Extra incumbent supplied by the caller, for example a constructive
    /// certificate. Must be a correspondence between the two inputs.
    pub initial: Option<Correspondence>,
    /// Worker threads. `1` runs the strictly sequential search, which always
    /// reports the first optimum in branching order.
    pub threads: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { budget: DEFAULT_BUDGET, greedy_seed: true, initial: None, threads: 1 }
    }
}

impl SolverOptions {
    pub fn with_budget(budget: u64) -> Self {
        SolverOptions { budget, ..Default::default() }
    }
}

/// Outcome of a distance computation.
#[derive(Debug, Clone, Serialize)]
pub struct GHResult {
    /// `d_GH`, or the upper bound when the search was cut short.
    pub distance: f64,
    #[serde(rename = "lower")]
    pub lower_bound: f64,
    #[serde(rename = "upper")]
    pub upper_bound: f64,
    pub exact: bool,
    /// Present iff `exact`.
    pub certificate: Option<Correspondence>,
    /// Best correspondence found; achieves `2 * upper_bound`.
    pub incumbent: Correspondence,
    #[serde(rename = "nodes")]
    pub nodes_explored: u64,
    #[serde(rename = "ms", serialize_with = "millis")]
    pub wall_time: Duration,
}

fn millis<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64() * 1e3)
}

impl GHResult {
    fn exact(certificate: Correspondence, dis: f64, nodes: u64, started: Instant) -> Self {
        GHResult {
            distance: dis / 2.0,
            lower_bound: dis / 2.0,
            upper_bound: dis / 2.0,
            exact: true,
            certificate: Some(certificate.clone()),
            incumbent: certificate,
            nodes_explored: nodes,
            wall_time: started.elapsed(),
        }
    }

    fn transpose(mut self) -> Self {
        self.certificate = self.certificate.map(|c| c.transpose());
        self.incumbent = self.incumbent.transpose();
        self
    }
}

/// `d_GH` by scanning every correspondence; the certificate is the first
/// minimizer in bitmask order.
pub fn brute_force_gh(x: &FiniteMetricSpace, y: &FiniteMetricSpace) -> Result<GHResult, SolverError> {
    brute_force_gh_capped(x, y, ENUMERATION_CAP)
}

pub fn brute_force_gh_capped(x: &FiniteMetricSpace, y: &FiniteMetricSpace, cap: usize) -> Result<GHResult, SolverError> {
    let started = Instant::now();
    let mut best: Option<(f64, Correspondence)> = None;
    let mut nodes = 0;
    for c in enumerate_correspondences_capped(x.len(), y.len(), cap)? {
        nodes += 1;
        let dis = distortion_of_pairs(x, y, c.pairs());
        if best.as_ref().is_none_or(|(b, _)| dis < *b) {
            best = Some((dis, c));
        }
    }
    let (dis, cert) = best.expect("at least one correspondence exists");
    Ok(GHResult::exact(cert, dis, nodes, started))
}

/// Every correspondence whose distortion equals the minimum, in bitmask order.
pub fn enumerate_optimal(x: &FiniteMetricSpace, y: &FiniteMetricSpace) -> Result<Vec<Correspondence>, SolverError> {
    let mut best = f64::INFINITY;
    let mut out = Vec::new();
    for c in enumerate_correspondences_capped(x.len(), y.len(), ENUMERATION_CAP)? {
        let dis = distortion_of_pairs(x, y, c.pairs());
        if dis < best {
            best = dis;
            out.clear();
        }
        if dis == best {
            out.push(c);
        }
    }
    Ok(out)
}

/// `|diam X - diam Y| / 2`.
pub fn lower_bound_gh(x: &FiniteMetricSpace, y: &FiniteMetricSpace) -> f64 {
    (diameter(x) - diameter(y)).abs() / 2.0
}

/// Hausdorff distance between the distance profiles `{d(x, .)}` and
/// `{d(y, .)}` as subsets of the real line. Any correspondence containing
/// `(x, y)` has distortion at least this large.
pub(crate) fn profile_gap(x_row: &[f64], y_sorted: &[f64], x_sorted: &[f64], y_row: &[f64]) -> f64 {
    directed_line(x_row, y_sorted).max(directed_line(y_row, x_sorted))
}

fn directed_line(from: &[f64], to_sorted: &[f64]) -> f64 {
    from.iter()
        .map(|&a| {
            let k = to_sorted.partition_point(|&b| b < a);
            let above = to_sorted.get(k).map_or(f64::INFINITY, |&b| b - a);
            let below = if k > 0 { a - to_sorted[k - 1] } else { f64::INFINITY };
            above.min(below)
        })
        .fold(0.0, f64::max)
}

/// Row-major `|X| x |Y|` table of [`profile_gap`] values.
pub(crate) fn profile_gaps(x: &FiniteMetricSpace, y: &FiniteMetricSpace) -> Vec<f64> {
    let sorted = |s: &FiniteMetricSpace| -> Vec<Vec<f64>> {
        s.rows()
            .map(|r| {
                let mut v = r.to_vec();
                v.sort_by(f64::total_cmp);
                v
            })
            .collect()
    };
    let xs = sorted(x);
    let ys = sorted(y);
    let mut out = Vec::with_capacity(x.len() * y.len());
    for i in 0..x.len() {
        for j in 0..y.len() {
            out.push(profile_gap(x.row(i), &ys[j], &xs[i], y.row(j)));
        }
    }
    out
}

/// Greedy correspondence and half its distortion.
///
/// Left points are visited by decreasing eccentricity; each takes the right
/// partner whose distance profile and already-placed pairs disagree least
/// with it (preferring partners not yet used, then lowest index). Right points
/// left over are attached to their nearest-profile left partner.
pub fn upper_bound_gh(x: &FiniteMetricSpace, y: &FiniteMetricSpace) -> (f64, Correspondence) {
    let gaps = profile_gaps(x, y);
    let (n, m) = (x.len(), y.len());
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(n.max(m));
    let mut used = vec![false; m];
    for &i in &eccentricity_order(x) {
        let cost = |j: usize| {
            pairs
                .iter()
                .map(|&(a, b)| (x.d(i, a) - y.d(j, b)).abs())
                .fold(gaps[i * m + j], f64::max)
        };
        let j = (0..m)
            .min_by(|&a, &b| cost(a).total_cmp(&cost(b)).then(used[a].cmp(&used[b])).then(a.cmp(&b)))
            .expect("right space is nonempty");
        used[j] = true;
        pairs.push((i, j));
    }
    for j in 0..m {
        if !used[j] {
            let i = (0..n)
                .min_by(|&a, &b| gaps[a * m + j].total_cmp(&gaps[b * m + j]).then(a.cmp(&b)))
                .expect("left space is nonempty");
            pairs.push((i, j));
        }
    }
    let corr = Correspondence::new(pairs, n, m).expect("greedy covers both sides");
    (distortion_of_pairs(x, y, corr.pairs()) / 2.0, corr)
}

/// Indices by decreasing eccentricity, ties by index.
pub(crate) fn eccentricity_order(x: &FiniteMetricSpace) -> Vec<usize> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x.eccentricity(b).total_cmp(&x.eccentricity(a)).then(a.cmp(&b)));
    order
}

/// Exact `d_GH` with the default options.
pub fn exact_gh(x: &FiniteMetricSpace, y: &FiniteMetricSpace, budget: u64) -> GHResult {
    exact_gh_with(x, y, &SolverOptions::with_budget(budget))
}

/// Branch-and-bound over correspondences.
///
/// The smaller space is put on the left. Left points are branched on in
/// decreasing eccentricity order; each branch fixes a nonempty set of right
/// partners, smallest sets first. A node is pruned once a lower bound on every
/// completion meets the incumbent distortion. The bound combines the
/// distortion among the fixed pairs, the cheapest admissible partner for every
/// unassigned left point, and the cheapest admissible left partner for every
/// uncovered right point.
pub fn exact_gh_with(x: &FiniteMetricSpace, y: &FiniteMetricSpace, opts: &SolverOptions) -> GHResult {
    if x.len() > y.len() {
        let mut o = opts.clone();
        o.initial = o.initial.map(|c| c.transpose());
        return bnb::solve(y, x, &o).transpose();
    }
    bnb::solve(x, y, opts)
}
