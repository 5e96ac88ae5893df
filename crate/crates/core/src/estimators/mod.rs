//! Treatment-effect estimators, efficient scores, weighted estimands,
//! variance bounds, and propensity trimming.

mod methods;
mod nuisance;
mod scores;

pub use methods::{
    estimate_arbe, estimate_dmle, estimate_dmle_detailed, estimate_dre, estimate_dse,
    estimate_naive, estimate_ols, stratified_folds, DseDetail,
};
pub use nuisance::{
    add_variance_estimates, fit_nuisance_model, fit_nuisances, fit_outcome_model,
    fit_treatment_model, NuisanceModel,
};
pub use scores::{
    efficient_score_ate, efficient_score_att, solve_score_ate, solve_score_att, ScoreVector,
};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{
    weight_function, Dataset, Estimand, Method, NuisanceEstimates, PointEstimate, RunConfig,
};
use crate::rng::derive_seed;

/// Run one of the reported estimators.
///
/// `naive`, `ols` and `dse` estimate a constant effect; their value does not
/// depend on the requested estimand and the tag simply echoes it. The
/// score-based estimators honor `ate`/`att`; residual balancing is
/// `att`-oriented with a two-sided `ate` variant.
pub fn estimate(
    method: Method,
    ds: &Dataset,
    cfg: &RunConfig,
    seed: u64,
    estimand: Estimand,
) -> Result<PointEstimate> {
    cfg.validate()?;
    estimand.validate()?;
    let mut est = match method {
        Method::Naive => estimate_naive(ds)?,
        Method::Ols => estimate_ols(ds, cfg)?,
        Method::Dse => estimate_dse(ds, cfg, seed)?.0,
        Method::Arbe => estimate_arbe(ds, cfg, seed, estimand)?,
        Method::Dre => estimate_dre(ds, cfg, seed, estimand)?,
        Method::Dmle => estimate_dmle(ds, cfg, seed, estimand)?,
        Method::Ipw => {
            let nuis = fit_nuisances(ds, cfg, derive_seed(seed, 45))?;
            ipw_estimate(ds, &nuis, cfg.ipw_hajek)?
        }
    };
    est.estimand = estimand;
    Ok(est)
}

/// Score-equation estimate from already-fitted nuisances.
pub fn dre_from_nuisances(
    ds: &Dataset,
    nuis: &NuisanceEstimates,
    estimand: Estimand,
) -> Result<PointEstimate> {
    ds.require_both_arms()?;
    let value = match estimand {
        Estimand::Ate => solve_score_ate(ds, nuis),
        Estimand::Att => solve_score_att(ds, nuis),
        Estimand::OverlapWeighted | Estimand::Trimmed { .. } => {
            return Ok(weighted_estimate(ds, nuis, estimand)?);
        }
    };
    Ok(PointEstimate::new(value, Method::Dre, estimand, ds.n()))
}

/// Inverse-probability-weighted estimate of the average effect; the Hajek
/// variant normalizes each arm's weights to sum to one.
pub fn ipw_estimate(ds: &Dataset, nuis: &NuisanceEstimates, hajek: bool) -> Result<PointEstimate> {
    ds.require_both_arms()?;
    let n = ds.n();
    let value = if hajek {
        let mut num_t = 0.0;
        let mut den_t = 0.0;
        let mut num_c = 0.0;
        let mut den_c = 0.0;
        for i in 0..n {
            let e = nuis.ehat[i];
            if ds.w()[i] == 1 {
                num_t += ds.y()[i] / e;
                den_t += 1.0 / e;
            } else {
                num_c += ds.y()[i] / (1.0 - e);
                den_c += 1.0 / (1.0 - e);
            }
        }
        num_t / den_t - num_c / den_c
    } else {
        let mut sum = 0.0;
        for i in 0..n {
            let e = nuis.ehat[i];
            sum += if ds.w()[i] == 1 {
                ds.y()[i] / e
            } else {
                -ds.y()[i] / (1.0 - e)
            };
        }
        sum / n as f64
    };
    Ok(PointEstimate::new(value, Method::Ipw, Estimand::Ate, n))
}

/// Weighted average effect for an arbitrary estimand weight: the
/// omega-weighted average of the per-unit doubly robust effect scores.
pub fn weighted_estimate(
    ds: &Dataset,
    nuis: &NuisanceEstimates,
    estimand: Estimand,
) -> Result<PointEstimate> {
    ds.require_both_arms()?;
    estimand.validate()?;
    let omega = weight_function(estimand, &nuis.ehat);
    let mut num = 0.0;
    let mut den = 0.0;
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
        num += omega[i] * (correction + m1 - m0);
        den += omega[i];
    }
    if den <= 0.0 {
        return Err(Error::EmptyAfterTrim {
            alpha: if let Estimand::Trimmed { alpha } = estimand {
                alpha
            } else {
                0.0
            },
        });
    }
    Ok(PointEstimate::new(num / den, Method::Dre, estimand, ds.n()))
}

/// Variance of the efficient score, the benchmark for precision comparisons.
#[derive(Debug, Clone)]
pub struct VarianceBound {
    pub estimand: Estimand,
    /// Mean of `per_unit_terms`.
    pub value: f64,
    pub per_unit_terms: Vec<f64>,
    /// For weighted estimands: the same bound under the alternative
    /// `1/mean(omega)^2` normalization (the primary value uses
    /// `1/mean(omega^2)`).
    pub alt_value: Option<f64>,
}

/// Variance bound for the requested estimand with plug-in nuisances.
///
/// For `ate` this is the mean squared efficient score at `tau_hat`. Weighted
/// estimands use the conditional-variance decomposition and therefore require
/// `sigma2` estimates on the nuisances.
pub fn variance_bound(
    ds: &Dataset,
    nuis: &NuisanceEstimates,
    estimand: Estimand,
    tau_hat: f64,
) -> Result<VarianceBound> {
    estimand.validate()?;
    match estimand {
        Estimand::Ate => {
            let score = efficient_score_ate(ds, nuis, tau_hat);
            let per_unit: Vec<f64> = score.phi.iter().map(|&v| v * v).collect();
            let value = linalg::mean(&per_unit);
            Ok(VarianceBound {
                estimand,
                value,
                per_unit_terms: per_unit,
                alt_value: None,
            })
        }
        _ => {
            let (s0, s1) = match (&nuis.sigma2_0hat, &nuis.sigma2_1hat) {
                (Some(a), Some(b)) => (a, b),
                _ => return Err(Error::MissingVarianceEstimates),
            };
            let omega = weight_function(estimand, &nuis.ehat);
            let mean_omega_sq = linalg::mean(&omega.iter().map(|&o| o * o).collect::<Vec<_>>());
            let mean_omega = linalg::mean(&omega);
            if mean_omega_sq <= 0.0 {
                return Err(Error::EmptyAfterTrim {
                    alpha: if let Estimand::Trimmed { alpha } = estimand {
                        alpha
                    } else {
                        0.0
                    },
                });
            }
            let raw: Vec<f64> = (0..ds.n())
                .map(|i| {
                    let o2 = omega[i] * omega[i];
                    let e = nuis.ehat[i];
                    let gap = nuis.mu1hat[i] - nuis.mu0hat[i] - tau_hat;
                    o2 * (s1[i] / e + s0[i] / (1.0 - e) + gap * gap)
                })
                .collect();
            let per_unit: Vec<f64> = raw.iter().map(|&t| t / mean_omega_sq).collect();
            let value = linalg::mean(&per_unit);
            let alt = linalg::mean(&raw) / (mean_omega * mean_omega);
            Ok(VarianceBound {
                estimand,
                value,
                per_unit_terms: per_unit,
                alt_value: Some(alt),
            })
        }
    }
}

/// Drop units with propensities outside `(alpha, 1-alpha)` and re-run the
/// inner estimator on the remaining subsample (all nuisances refit there).
#[allow(clippy::too_many_arguments)]
pub fn trimmed_estimate(
    ds: &Dataset,
    nuis: &NuisanceEstimates,
    alpha: f64,
    inner: Method,
    cfg: &RunConfig,
    seed: u64,
    estimand: Estimand,
) -> Result<PointEstimate> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::InvalidInput(format!(
            "trim alpha must be in (0, 0.5), got {alpha}"
        )));
    }
    let keep: Vec<usize> = (0..ds.n())
        .filter(|&i| nuis.ehat[i] > alpha && nuis.ehat[i] < 1.0 - alpha)
        .collect();
    if keep.is_empty() {
        return Err(Error::EmptyAfterTrim { alpha });
    }
    let sub = ds.select(&keep);
    if sub.require_both_arms().is_err() {
        return Err(Error::EmptyAfterTrim { alpha });
    }
    let mut est = estimate(inner, &sub, cfg, derive_seed(seed, 47), estimand)?;
    est.n_used = keep.len();
    Ok(est)
}
