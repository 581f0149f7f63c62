//! Gromov-Hausdorff distances between finite metric spaces, with optimal
//! correspondences as certificates, and the interpolated spaces that form a
//! geodesic between two spaces.
//!
//! * [`metric`]: validated finite metric spaces, nets, covering numbers and
//!   the max-product space.
//! * [`correspondence`]: relations, distortion, and Hausdorff distance between
//!   relations.
//! * [`solver`]: brute-force and branch-and-bound `d_GH`, net approximation
//!   and the net convergence experiment.
//! * [`geodesic`]: interpolants `gamma_R(t)` and the geodesic checks.
#![allow(clippy::needless_range_loop)]
// `!(a < b)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod correspondence;
pub mod generate;
pub mod geodesic;
pub mod io;
pub mod metric;
pub mod parallel;
pub mod solver;

pub use correspondence::{distortion, Correspondence, Relation};
pub use metric::{validate_metric, FiniteMetricSpace};
pub use solver::{brute_force_gh, exact_gh, exact_gh_with, GHResult, SolverOptions};
