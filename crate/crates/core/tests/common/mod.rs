#![allow(dead_code)]

use gh_core::correspondence::Relation;
use gh_core::generate::{euclidean, perturbed_ultrametric};
use gh_core::metric::{validate_metric, FiniteMetricSpace};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use gh_core::generate::rng;

/// Random space with `n` points; alternates between the two generator kinds
/// and a small-integer metric that produces many ties.
pub fn random_space(rng: &mut ChaCha8Rng, n: usize) -> FiniteMetricSpace {
    match rng.gen_range(0..3) {
        0 => {
            let dim = rng.gen_range(1..=3);
            euclidean(rng, n, dim)
        }
        1 => perturbed_ultrametric(rng, n),
        _ => integer_metric(rng, n),
    }
}

/// Distances in {1, 2} (always a metric), scaled by a random integer.
pub fn integer_metric(rng: &mut ChaCha8Rng, n: usize) -> FiniteMetricSpace {
    let scale = f64::from(rng.gen_range(1..=3));
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = scale * f64::from(rng.gen_range(1..=2));
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    validate_metric(&m, 0.0).unwrap()
}

pub fn random_relation(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Relation {
    loop {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (0..m).map(move |j| (i, j)))
            .filter(|_| rng.gen_bool(0.35))
            .collect();
        if !pairs.is_empty() {
            return Relation::new(pairs, n, m).unwrap();
        }
    }
}

/// Random correspondence: a random relation plus one partner for every
/// uncovered point.
pub fn random_correspondence(rng: &mut ChaCha8Rng, n: usize, m: usize) -> gh_core::Correspondence {
    let base = random_relation(rng, n, m);
    let mut pairs = base.pairs().to_vec();
    for i in 0..n {
        if !pairs.iter().any(|p| p.0 == i) {
            pairs.push((i, rng.gen_range(0..m)));
        }
    }
    for j in 0..m {
        if !pairs.iter().any(|p| p.1 == j) {
            pairs.push((rng.gen_range(0..n), j));
        }
    }
    gh_core::Correspondence::new(pairs, n, m).unwrap()
}

pub fn random_permutation(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

/// Distortion straight from the definition, over all ordered pair-pairs.
pub fn oracle_distortion(x: &FiniteMetricSpace, y: &FiniteMetricSpace, pairs: &[(usize, usize)]) -> f64 {
    let mut worst = 0.0f64;
    for &(a, b) in pairs {
        for &(c, d) in pairs {
            worst = worst.max((x.d(a, c) - y.d(b, d)).abs());
        }
    }
    worst
}

/// `d_GH` by trying every subset of `X x Y` as a relation and keeping the
/// correspondences. Shares no code with the library's enumeration.
pub fn oracle_gh(x: &FiniteMetricSpace, y: &FiniteMetricSpace) -> f64 {
    let (n, m) = (x.len(), y.len());
    let cells: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..m).map(move |j| (i, j))).collect();
    assert!(cells.len() <= 16);
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << cells.len()) {
        let pairs: Vec<(usize, usize)> = cells.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &p)| p).collect();
        let rows_ok = (0..n).all(|i| pairs.iter().any(|p| p.0 == i));
        let cols_ok = (0..m).all(|j| pairs.iter().any(|p| p.1 == j));
        if rows_ok && cols_ok {
            best = best.min(oracle_distortion(x, y, &pairs));
        }
    }
    best / 2.0
}

/// Hausdorff distance between two finite sets under a supplied metric.
pub fn oracle_hausdorff<T: Copy>(a: &[T], b: &[T], d: impl Fn(T, T) -> f64) -> f64 {
    let dir = |p: &[T], q: &[T]| {
        p.iter()
            .map(|&u| q.iter().map(|&v| d(u, v)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    dir(a, b).max(dir(b, a))
}

pub fn report(id: u32, name: &str, ok: bool, detail: &str) {
    println!("[{}] criterion {id}: {name} ({detail})", if ok { "PASS" } else { "FAIL" });
}
