//! Deterministic random spaces for tests, benchmarks and the CLI.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::metric::{validate_metric, FiniteMetricSpace};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenerateError {
    #[error("BadParams({0})")]
    BadParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    /// Uniform points in `[0, 1]^dim` with Euclidean distances.
    Euclidean,
    /// A random ultrametric with small symmetric noise added off the diagonal.
    PerturbedUltrametric,
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn generate(kind: SpaceKind, n: usize, dim: usize, seed: u64) -> Result<FiniteMetricSpace, GenerateError> {
    if n == 0 {
        return Err(GenerateError::BadParams("n must be at least 1".into()));
    }
    let mut r = rng(seed);
    match kind {
        SpaceKind::Euclidean => {
            if dim == 0 {
                return Err(GenerateError::BadParams("dim must be at least 1".into()));
            }
            Ok(euclidean(&mut r, n, dim))
        }
        SpaceKind::PerturbedUltrametric => Ok(perturbed_ultrametric(&mut r, n)),
    }
}

/// `n` uniform points in the unit cube.
pub fn euclidean<R: Rng>(rng: &mut R, n: usize, dim: usize) -> FiniteMetricSpace {
    let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect()).collect();
    let m: Vec<Vec<f64>> = pts
        .iter()
        .map(|a| {
            pts.iter()
                .map(|b| a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt())
                .collect()
        })
        .collect();
    validate_metric(&m, 1e-12).expect("Euclidean distances form a metric")
}

/// Random agglomerative ultrametric plus noise of at most half the smallest
/// merge height. For an ultrametric `d(i, k) <= max(d(i, j), d(j, k))`, so
/// adding at most the smallest positive distance keeps the triangle
/// inequality.
pub fn perturbed_ultrametric<R: Rng>(rng: &mut R, n: usize) -> FiniteMetricSpace {
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut m = vec![vec![0.0; n]; n];
    let mut height = 0.0;
    let mut first = None;
    while clusters.len() > 1 {
        height += rng.gen_range(0.1..1.0);
        first.get_or_insert(height);
        let a = rng.gen_range(0..clusters.len());
        let mut b = rng.gen_range(0..clusters.len() - 1);
        if b >= a {
            b += 1;
        }
        let (lo, hi) = (a.min(b), a.max(b));
        let merged = clusters.swap_remove(hi);
        for &p in &clusters[lo] {
            for &q in &merged {
                m[p][q] = height;
                m[q][p] = height;
            }
        }
        clusters[lo].extend(merged);
    }
    let noise = first.unwrap_or(0.0) / 2.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let e = noise * rng.gen::<f64>();
            m[i][j] += e;
            m[j][i] += e;
        }
    }
    validate_metric(&m, 1e-12).expect("perturbed ultrametric is a metric")
}
