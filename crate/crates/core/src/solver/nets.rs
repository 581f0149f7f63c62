use serde::Serialize;

use super::{exact_gh_with, GHResult, SolverError, SolverOptions};
use crate::correspondence::{distortion, hausdorff_relation_distance, Correspondence, Relation};
use crate::metric::{epsilon_net, product_space, restrict, FiniteMetricSpace};

/// `d_GH` of the two `eps`-nets, which is within `error_bar` of `d_GH(X, Y)`.
#[derive(Debug, Clone, Serialize)]
pub struct NetApprox {
    pub value: f64,
    pub error_bar: f64,
    pub net_left: Vec<usize>,
    pub net_right: Vec<usize>,
    pub result: GHResult,
}

impl NetApprox {
    pub fn interval(&self) -> (f64, f64) {
        (self.value - self.error_bar, self.value + self.error_bar)
    }
}

/// Solve on the `eps`-nets of both spaces.
///
/// Each net is within `d_GH < eps` of its space, so by the triangle inequality
/// the true distance lies in `value +/- 2 eps`. When the net solve runs out of
/// budget the reported value is its upper bound and the interval is widened to
/// cover the net solver's lower bound as well.
pub fn net_approx_gh(
    x: &FiniteMetricSpace,
    y: &FiniteMetricSpace,
    eps: f64,
    opts: &SolverOptions,
) -> Result<NetApprox, SolverError> {
    let net_left = epsilon_net(x, eps)?;
    let net_right = epsilon_net(y, eps)?;
    let result = exact_gh_with(&restrict(x, &net_left)?, &restrict(y, &net_right)?, opts);
    let slack = result.upper_bound - result.lower_bound;
    Ok(NetApprox {
        value: result.distance,
        error_bar: 2.0 * eps + slack,
        net_left,
        net_right,
        result,
    })
}

/// One row of a [`ConvergenceReport`].
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceStep {
    pub eps: f64,
    pub net_left: Vec<usize>,
    pub net_right: Vec<usize>,
    /// Optimal net-level correspondence, in full-space indices.
    pub relation: Relation,
    /// Distortion of `relation`.
    pub distortion: f64,
    /// `2 d_GH(X_n, Y_n)`.
    pub two_dgh: f64,
    /// Hausdorff distance in `X x Y` from `relation` to the last step's.
    pub dh_to_final: f64,
    /// `4 * dh_to_final`.
    pub lemma_bound: f64,
    pub exact: bool,
}

impl ConvergenceStep {
    /// `|dis(R_n) - dis(R_final)| <= 4 d_H(R_n, R_final)`, up to `slack`.
    pub fn obeys_bound(&self, final_distortion: f64, slack: f64) -> bool {
        (self.distortion - final_distortion).abs() <= self.lemma_bound + slack
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub eps_schedule: Vec<f64>,
    pub steps: Vec<ConvergenceStep>,
    pub final_distortion: f64,
    /// `d_GH(X, Y)` solved on the full spaces.
    pub dgh: f64,
    pub dgh_exact: bool,
}

impl ConvergenceReport {
    /// Whether the last step's distortion equals `2 d_GH(X, Y)` within `tol`.
    pub fn converged(&self, tol: f64) -> bool {
        (self.final_distortion - 2.0 * self.dgh).abs() <= tol
    }

    /// Whether every step obeys the distortion stability bound.
    pub fn all_steps_bounded(&self, slack: f64) -> bool {
        self.steps.iter().all(|s| s.obeys_bound(self.final_distortion, slack))
    }

    /// CSV with columns `eps,net_x,net_y,dis_Rn,two_dgh,dH_to_final,lemma_bound`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("eps,net_x,net_y,dis_Rn,two_dgh,dH_to_final,lemma_bound\n");
        for s in &self.steps {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                s.eps,
                s.net_left.len(),
                s.net_right.len(),
                s.distortion,
                s.two_dgh,
                s.dh_to_final,
                s.lemma_bound
            ));
        }
        out
    }
}

/// Solve on a shrinking sequence of nets and track how the optimal net
/// correspondences approach the last one inside `X x Y`.
pub fn convergence_experiment(
    x: &FiniteMetricSpace,
    y: &FiniteMetricSpace,
    schedule: &[f64],
    opts: &SolverOptions,
) -> Result<ConvergenceReport, SolverError> {
    if schedule.is_empty() {
        return Err(SolverError::EmptySchedule);
    }
    if let Some(k) = (1..schedule.len()).find(|&k| schedule[k] >= schedule[k - 1]) {
        return Err(SolverError::ScheduleNotDecreasing(k));
    }

    struct Raw {
        eps: f64,
        net_left: Vec<usize>,
        net_right: Vec<usize>,
        relation: Relation,
        two_dgh: f64,
        exact: bool,
    }
    let mut raw = Vec::with_capacity(schedule.len());
    for &eps in schedule {
        let approx = net_approx_gh(x, y, eps, opts)?;
        let lifted = lift(&approx.result.incumbent, &approx.net_left, &approx.net_right, x.len(), y.len());
        raw.push(Raw {
            eps,
            net_left: approx.net_left,
            net_right: approx.net_right,
            relation: lifted,
            two_dgh: 2.0 * approx.result.distance,
            exact: approx.result.exact,
        });
    }

    let product = product_space(x, y);
    let last = raw.last().expect("nonempty schedule").relation.clone();
    let final_distortion = distortion(x, y, &last)?;
    let mut steps = Vec::with_capacity(raw.len());
    for r in raw {
        let dh = hausdorff_relation_distance(&product, &r.relation, &last)?;
        steps.push(ConvergenceStep {
            eps: r.eps,
            distortion: distortion(x, y, &r.relation)?,
            net_left: r.net_left,
            net_right: r.net_right,
            relation: r.relation,
            two_dgh: r.two_dgh,
            dh_to_final: dh,
            lemma_bound: 4.0 * dh,
            exact: r.exact,
        });
    }
    let full = exact_gh_with(x, y, opts);
    Ok(ConvergenceReport {
        eps_schedule: schedule.to_vec(),
        steps,
        final_distortion,
        dgh: full.distance,
        dgh_exact: full.exact,
    })
}

/// Rewrite a correspondence between nets in the indices of the full spaces.
fn lift(c: &Correspondence, net_left: &[usize], net_right: &[usize], n: usize, m: usize) -> Relation {
    let pairs = c.pairs().iter().map(|&(i, j)| (net_left[i], net_right[j])).collect();
    Relation::new(pairs, n, m).expect("net indices are in range")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{diameter, line};
    use crate::solver::{exact_gh, DEFAULT_BUDGET};

    #[test]
    fn coarse_nets_are_single_points() {
        let x = line(&[0.0, 1.0, 2.5]);
        let y = line(&[0.0, 4.0]);
        let a = net_approx_gh(&x, &y, 10.0, &SolverOptions::default()).unwrap();
        assert_eq!(a.value, 0.0);
        assert_eq!(a.error_bar, 20.0);
        let truth = exact_gh(&x, &y, DEFAULT_BUDGET).distance;
        let (lo, hi) = a.interval();
        assert!(lo <= truth && truth <= hi);
        assert!(truth <= diameter(&x).max(diameter(&y)) / 2.0);
    }

    #[test]
    fn fine_nets_saturate() {
        let x = line(&[0.0, 1.0, 2.5]);
        let y = line(&[0.0, 0.7, 4.0]);
        let a = net_approx_gh(&x, &y, 0.1, &SolverOptions::default()).unwrap();
        assert_eq!(a.net_left.len(), 3);
        assert_eq!(a.value, exact_gh(&x, &y, DEFAULT_BUDGET).distance);
    }

    #[test]
    fn schedule_must_decrease() {
        let x = line(&[0.0, 1.0]);
        let err = convergence_experiment(&x, &x, &[1.0, 1.0], &SolverOptions::default()).unwrap_err();
        assert_eq!(err, SolverError::ScheduleNotDecreasing(1));
        assert_eq!(
            convergence_experiment(&x, &x, &[], &SolverOptions::default()).unwrap_err(),
            SolverError::EmptySchedule
        );
    }

    #[test]
    fn experiment_rows() {
        let x = line(&[0.0, 1.0, 2.5, 2.9]);
        let y = line(&[0.0, 0.5, 3.0]);
        let rep = convergence_experiment(&x, &y, &[10.0, 2.0, 1.0, 0.2], &SolverOptions::default()).unwrap();
        assert_eq!(rep.steps[0].net_left, vec![0]);
        assert_eq!(rep.steps[0].distortion, 0.0);
        assert!(rep.converged(1e-12));
        assert!(rep.all_steps_bounded(1e-12));
        assert_eq!(rep.steps.last().unwrap().dh_to_final, 0.0);
        let csv = rep.to_csv();
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.starts_with("eps,net_x,net_y,dis_Rn,two_dgh,dH_to_final,lemma_bound\n"));
    }
}
