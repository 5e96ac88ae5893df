//! Efficient score functions and their closed-form zeros.
//!
//! For the average effect the per-unit score is
//! `phi_i = w(y - mu1)/e - (1-w)(y - mu0)/(1-e) + mu1 - mu0 - tau`;
//! for the effect on the treated it is
//! `phi'_i = (w/p)(y - mu0 - tau_t) - ((1-w) e /(p(1-e)))(y - mu0)`.
//! Both residual corrections enter with a minus sign: that is the version
//! whose sample mean is driven to zero at the estimate and the one that keeps
//! the double-robustness cancellation; the corresponding displays are
//! sometimes typeset with a plus instead.

use crate::model::{Dataset, Estimand, NuisanceEstimates};

/// Per-unit efficient-score evaluations at a candidate estimand value.
#[derive(Debug, Clone)]
pub struct ScoreVector {
    pub phi: Vec<f64>,
    pub estimand: Estimand,
    pub tau_used: f64,
}

impl ScoreVector {
    pub fn mean(&self) -> f64 {
        self.phi.iter().sum::<f64>() / self.phi.len() as f64
    }
}

/// Score for the population average effect, evaluated at `tau`.
pub fn efficient_score_ate(ds: &Dataset, nuis: &NuisanceEstimates, tau: f64) -> ScoreVector {
    let phi = (0..ds.n())
        .map(|i| {
            let y = ds.y()[i];
            let e = nuis.ehat[i];
            let m0 = nuis.mu0hat[i];
            let m1 = nuis.mu1hat[i];
            let correction = if ds.w()[i] == 1 {
                (y - m1) / e
            } else {
                -(y - m0) / (1.0 - e)
            };
            correction + m1 - m0 - tau
        })
        .collect();
    ScoreVector {
        phi,
        estimand: Estimand::Ate,
        tau_used: tau,
    }
}

/// Score for the average effect on the treated, evaluated at `tau_t`.
pub fn efficient_score_att(ds: &Dataset, nuis: &NuisanceEstimates, tau_t: f64) -> ScoreVector {
    let p = nuis.phat;
    let phi = (0..ds.n())
        .map(|i| {
            let y = ds.y()[i];
            let e = nuis.ehat[i];
            let r0 = y - nuis.mu0hat[i];
            if ds.w()[i] == 1 {
                (r0 - tau_t) / p
            } else {
                -e * r0 / (p * (1.0 - e))
            }
        })
        .collect();
    ScoreVector {
        phi,
        estimand: Estimand::Att,
        tau_used: tau_t,
    }
}

/// The tau at which the average-effect score has mean zero.
pub fn solve_score_ate(ds: &Dataset, nuis: &NuisanceEstimates) -> f64 {
    let mut sum = 0.0;
    for i in 0..ds.n() {
        let y = ds.y()[i];
        let e = nuis.ehat[i];
        let m0 = nuis.mu0hat[i];
        let m1 = nuis.mu1hat[i];
        let correction = if ds.w()[i] == 1 {
            (y - m1) / e
        } else {
            -(y - m0) / (1.0 - e)
        };
        sum += correction + m1 - m0;
    }
    sum / ds.n() as f64
}

/// The tau_t at which the treated-effect score has mean zero:
/// `[sum_t (y - mu0) - sum_c (e/(1-e))(y - mu0)] / n_t`.
pub fn solve_score_att(ds: &Dataset, nuis: &NuisanceEstimates) -> f64 {
    let mut num = 0.0;
    let mut n_t = 0usize;
    for i in 0..ds.n() {
        let r0 = ds.y()[i] - nuis.mu0hat[i];
        if ds.w()[i] == 1 {
            num += r0;
            n_t += 1;
        } else {
            let e = nuis.ehat[i];
            num -= e / (1.0 - e) * r0;
        }
    }
    num / n_t as f64
}
