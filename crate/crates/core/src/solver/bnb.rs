use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::time::Instant;

use super::{eccentricity_order, profile_gaps, upper_bound_gh, GHResult, SolverOptions};
use crate::correspondence::{distortion_of_pairs, Correspondence};
use crate::metric::{diameter, FiniteMetricSpace};

/// State shared by every worker of one search.
struct Shared {
    /// Bit pattern of the incumbent distortion. Distortions are nonnegative,
    /// so integer order on the bits matches float order.
    best: AtomicU64,
    nodes: AtomicU64,
    aborted: AtomicBool,
    budget: u64,
}

impl Shared {
    fn incumbent(&self) -> f64 {
        f64::from_bits(self.best.load(Ordering::Relaxed))
    }

    /// Count one node; false once the budget is spent.
    fn tick(&self) -> bool {
        if self.aborted.load(Ordering::Relaxed) {
            return false;
        }
        if self.nodes.fetch_add(1, Ordering::Relaxed) + 1 >= self.budget {
            self.aborted.store(true, Ordering::Relaxed);
            return false;
        }
        true
    }
}

/// Search problem with `left.len() <= right.len()`.
struct Problem<'a> {
    left: &'a FiniteMetricSpace,
    right: &'a FiniteMetricSpace,
    /// Branching order over left points.
    order: Vec<usize>,
    /// Profile lower bound for each pair, row-major `left x right`.
    gaps: Vec<f64>,
}

/// A search node: partners fixed for `order[..depth]`.
#[derive(Clone)]
struct Node {
    depth: usize,
    pairs: Vec<(usize, usize)>,
    /// Distortion among the fixed pairs.
    partial: f64,
    /// `act[i * m + j]`: worst disagreement between a prospective pair
    /// `(i, j)` and the fixed pairs.
    act: Vec<f64>,
    covered: Vec<u32>,
}

impl Problem<'_> {
    fn m(&self) -> usize {
        self.right.len()
    }

    #[inline]
    fn pair_cost(&self, act: &[f64], i: usize, j: usize) -> f64 {
        let k = i * self.m() + j;
        act[k].max(self.gaps[k])
    }

    fn root(&self) -> Node {
        Node {
            depth: 0,
            pairs: Vec::new(),
            partial: 0.0,
            act: vec![0.0; self.left.len() * self.m()],
            covered: vec![0; self.m()],
        }
    }

    /// Lower bound on the distortion of any correspondence, before search.
    fn root_bound(&self) -> f64 {
        let (n, m) = (self.left.len(), self.m());
        let rows = (0..n)
            .map(|i| (0..m).map(|j| self.gaps[i * m + j]).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max);
        let cols = (0..m)
            .map(|j| (0..n).map(|i| self.gaps[i * m + j]).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max);
        (diameter(self.left) - diameter(self.right)).abs().max(rows).max(cols)
    }

    /// Bound on every completion of `node`, or `None` if it has none.
    fn bound(&self, node: &Node) -> Option<f64> {
        let rest = &self.order[node.depth..];
        let mut b = node.partial;
        for &i in rest {
            let cheapest = (0..self.m()).map(|j| self.pair_cost(&node.act, i, j)).fold(f64::INFINITY, f64::min);
            b = b.max(cheapest);
        }
        for j in (0..self.m()).filter(|&j| node.covered[j] == 0) {
            let cheapest = rest.iter().map(|&i| self.pair_cost(&node.act, i, j)).fold(f64::INFINITY, f64::min);
            if cheapest.is_infinite() {
                return None;
            }
            b = b.max(cheapest);
        }
        Some(b)
    }

    /// Fix `subset` as the partners of the next left point.
    fn child(&self, node: &Node, subset: &[usize]) -> Node {
        let m = self.m();
        let i = self.order[node.depth];
        let mut partial = node.partial;
        for (k, &j) in subset.iter().enumerate() {
            partial = partial.max(node.act[i * m + j]);
            for &jj in &subset[k + 1..] {
                partial = partial.max(self.right.d(j, jj));
            }
        }
        let mut act = node.act.clone();
        for &ii in &self.order[node.depth + 1..] {
            let dx = self.left.d(ii, i);
            for j in 0..m {
                let slot = &mut act[ii * m + j];
                for &jj in subset {
                    *slot = slot.max((dx - self.right.d(j, jj)).abs());
                }
            }
        }
        let mut covered = node.covered.clone();
        let mut pairs = node.pairs.clone();
        for &j in subset {
            covered[j] += 1;
            pairs.push((i, j));
        }
        Node { depth: node.depth + 1, pairs, partial, act, covered }
    }

    /// Partner sets for the next left point that can still beat `incumbent`,
    /// smallest first, lexicographic within a size.
    fn subsets(&self, node: &Node, incumbent: f64) -> Vec<Vec<usize>> {
        let i = self.order[node.depth];
        let viable: Vec<usize> = (0..self.m())
            .filter(|&j| node.partial.max(self.pair_cost(&node.act, i, j)) < incumbent)
            .collect();
        if node.depth + 1 == self.left.len() {
            // Last left point: it must take every uncovered right point, and
            // any extra partner can only raise the distortion.
            let uncovered: Vec<usize> = (0..self.m()).filter(|&j| node.covered[j] == 0).collect();
            return if uncovered.is_empty() {
                viable.into_iter().map(|j| vec![j]).collect()
            } else if uncovered.iter().all(|j| viable.contains(j)) {
                vec![uncovered]
            } else {
                Vec::new()
            };
        }
        let mut out = Vec::new();
        for size in 1..=viable.len() {
            let before = out.len();
            let mut buf = Vec::with_capacity(size);
            self.combos(&viable, size, 0, incumbent, &mut buf, &mut out);
            if out.len() == before {
                break;
            }
        }
        out
    }

    fn combos(
        &self,
        viable: &[usize],
        size: usize,
        start: usize,
        incumbent: f64,
        buf: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if buf.len() == size {
            out.push(buf.clone());
            return;
        }
        for k in start..viable.len() {
            let j = viable[k];
            if buf.iter().any(|&jj| self.right.d(j, jj) >= incumbent) {
                continue;
            }
            buf.push(j);
            self.combos(viable, size, k + 1, incumbent, buf, out);
            buf.pop();
        }
    }
}

struct Worker<'a, 'p> {
    problem: &'a Problem<'p>,
    shared: &'a Shared,
    best: Option<(f64, Vec<(usize, usize)>)>,
}

impl Worker<'_, '_> {
    fn offer(&mut self, pairs: &[(usize, usize)], dis: f64) {
        if dis < self.shared.incumbent() {
            self.shared.best.fetch_min(dis.to_bits(), Ordering::Relaxed);
            self.best = Some((dis, pairs.to_vec()));
        }
    }

    fn visit(&mut self, node: &Node) {
        if node.depth == self.problem.left.len() {
            let dis = distortion_of_pairs(self.problem.left, self.problem.right, &node.pairs);
            debug_assert_eq!(dis, node.partial);
            self.offer(&node.pairs, dis);
            return;
        }
        for subset in self.problem.subsets(node, self.shared.incumbent()) {
            if !self.shared.tick() {
                return;
            }
            let child = self.problem.child(node, &subset);
            match self.problem.bound(&child) {
                Some(b) if b < self.shared.incumbent() => self.visit(&child),
                _ => {}
            }
        }
    }
}

pub(super) fn solve(left: &FiniteMetricSpace, right: &FiniteMetricSpace, opts: &SolverOptions) -> GHResult {
    debug_assert!(left.len() <= right.len());
    let started = Instant::now();
    let (n, m) = (left.len(), right.len());
    let problem = Problem { left, right, order: eccentricity_order(left), gaps: profile_gaps(left, right) };

    let mut seed: Option<(f64, Correspondence)> = None;
    let mut consider = |c: Correspondence| {
        let dis = distortion_of_pairs(left, right, c.pairs());
        if seed.as_ref().is_none_or(|(b, _)| dis < *b) {
            seed = Some((dis, c));
        }
    };
    if let Some(c) = &opts.initial {
        assert_eq!((c.left_size(), c.right_size()), (n, m), "initial correspondence has the wrong shape");
        consider(c.clone());
    }
    if opts.greedy_seed {
        consider(upper_bound_gh(left, right).1);
    }

    let root_bound = problem.root_bound();
    let shared = Shared {
        best: AtomicU64::new(seed.as_ref().map_or(f64::INFINITY, |s| s.0).to_bits()),
        nodes: AtomicU64::new(1),
        aborted: AtomicBool::new(opts.budget <= 1),
        budget: opts.budget,
    };
    if let Some((dis, cert)) = &seed {
        if *dis <= root_bound {
            return GHResult::exact(cert.clone(), *dis, 1, started);
        }
    }

    let found = search(&problem, &shared, opts.threads);
    let nodes = shared.nodes.load(Ordering::Relaxed);
    let best = match (found, seed) {
        (Some((dis, pairs)), _) => (dis, Correspondence::new(pairs, n, m).expect("leaf covers both sides")),
        (None, Some(s)) => s,
        (None, None) => {
            let c = upper_bound_gh(left, right).1;
            (distortion_of_pairs(left, right, c.pairs()), c)
        }
    };
    if !shared.aborted.load(Ordering::Relaxed) {
        return GHResult::exact(best.1, best.0, nodes, started);
    }
    let upper = best.0 / 2.0;
    GHResult {
        distance: upper,
        lower_bound: (root_bound / 2.0).min(upper),
        upper_bound: upper,
        exact: false,
        certificate: None,
        incumbent: best.1,
        nodes_explored: nodes,
        wall_time: started.elapsed(),
    }
}

fn search(problem: &Problem<'_>, shared: &Shared, threads: usize) -> Option<(f64, Vec<(usize, usize)>)> {
    #[cfg(feature = "parallel")]
    if threads > 1 {
        return search_parallel(problem, shared, threads);
    }
    let _ = threads;
    let mut worker = Worker { problem, shared, best: None };
    worker.visit(&problem.root());
    worker.best
}

/// Distortion and pairs of a subtree's best correspondence.
#[cfg(feature = "parallel")]
type Found = (f64, Vec<(usize, usize)>);

/// Split the root's children across a rayon pool. The reported distortion is
/// the same as the sequential search; among equal optima the lowest root
/// branch wins, but which optimum a branch reports may depend on timing.
#[cfg(feature = "parallel")]
fn search_parallel(problem: &Problem<'_>, shared: &Shared, threads: usize) -> Option<Found> {
    use rayon::prelude::*;

    let root = problem.root();
    let subsets = problem.subsets(&root, shared.incumbent());
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool");
    let results: Vec<Option<Found>> = pool.install(|| {
        subsets
            .par_iter()
            .map(|subset| {
                let mut worker = Worker { problem, shared, best: None };
                if !shared.tick() {
                    return None;
                }
                let child = problem.child(&root, subset);
                if let Some(b) = problem.bound(&child) {
                    if b < shared.incumbent() {
                        worker.visit(&child);
                    }
                }
                worker.best
            })
            .collect()
    });
    results
        .into_iter()
        .flatten()
        .min_by(|a, b| a.0.total_cmp(&b.0))
}
