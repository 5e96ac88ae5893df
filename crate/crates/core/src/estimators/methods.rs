//! The six reported estimators.

use crate::balance::{self, BalanceTarget};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::linmod;
use crate::model::{Dataset, Estimand, Method, PointEstimate, RunConfig};
use crate::rng::{derive_seed, derive_seed2, shuffled_indices, stream};

use super::nuisance::{
    fit_nuisance_model, fit_nuisances, fit_outcome_model, fit_treatment_model,
};
use super::scores::{solve_score_ate, solve_score_att};

/// Simple difference in average outcomes by treatment status.
pub fn estimate_naive(ds: &Dataset) -> Result<PointEstimate> {
    ds.require_both_arms()?;
    let mut sum_t = 0.0;
    let mut sum_c = 0.0;
    let n_t = ds.n_treated();
    let n_c = ds.n() - n_t;
    for i in 0..ds.n() {
        if ds.w()[i] == 1 {
            sum_t += ds.y()[i];
        } else {
            sum_c += ds.y()[i];
        }
    }
    let value = sum_t / n_t as f64 - sum_c / n_c as f64;
    Ok(PointEstimate::new(value, Method::Naive, Estimand::Ate, ds.n()))
}

/// Coefficient on the treatment indicator in OLS of the outcome on
/// (treatment, all covariates, intercept).
pub fn estimate_ols(ds: &Dataset, cfg: &RunConfig) -> Result<PointEstimate> {
    ds.require_both_arms()?;
    let n = ds.n();
    let d = ds.d();
    let mut design = Matrix::zeros(n, d + 1);
    for i in 0..n {
        design.set(i, 0, f64::from(ds.w()[i]));
        for j in 0..d {
            design.set(i, j + 1, ds.x().get(i, j));
        }
    }
    let fit = if cfg.linmod.ridge_fallback {
        linmod::fit_ols_with_fallback(&design, ds.y(), true, 1e-6)?
    } else {
        linmod::fit_ols(&design, ds.y(), true)?
    };
    Ok(PointEstimate::new(
        fit.coefficients[0],
        Method::Ols,
        Estimand::Ate,
        n,
    ))
}

/// Selection metadata kept for reporting.
#[derive(Debug, Clone)]
pub struct DseDetail {
    pub outcome_selected: Vec<usize>,
    pub treatment_selected: Vec<usize>,
    pub union: Vec<usize>,
    pub ridge_fallback: bool,
}

/// Double selection: lasso the outcome equation, lasso the treatment
/// equation, then OLS of the outcome on the treatment and the union of the
/// selected covariates.
pub fn estimate_dse(ds: &Dataset, cfg: &RunConfig, seed: u64) -> Result<(PointEstimate, DseDetail)> {
    ds.require_both_arms()?;
    // selection fits use pure L1
    let mut sel_cfg = cfg.clone();
    sel_cfg.linmod.mix_outcome = 1.0;
    sel_cfg.linmod.mix_treatment = 1.0;
    let outcome_fit = fit_outcome_model(
        ds.x(),
        ds.y(),
        &sel_cfg,
        cfg.linmod.selection_rule,
        derive_seed2(seed, 21, 0),
    )?;
    let treatment_fit = fit_treatment_model(
        ds.x(),
        ds.w(),
        &sel_cfg,
        cfg.linmod.selection_rule,
        derive_seed2(seed, 22, 0),
    )?;
    let s_y = outcome_fit.active_set();
    let s_w = treatment_fit.active_set();
    let mut union = s_y.clone();
    union.extend_from_slice(&s_w);
    union.sort_unstable();
    union.dedup();

    let n = ds.n();
    let mut design = Matrix::zeros(n, 1 + union.len());
    for i in 0..n {
        design.set(i, 0, f64::from(ds.w()[i]));
        for (k, &j) in union.iter().enumerate() {
            design.set(i, k + 1, ds.x().get(i, j));
        }
    }
    let fit = linmod::fit_ols_with_fallback(&design, ds.y(), true, 1e-6)?;
    let detail = DseDetail {
        outcome_selected: s_y,
        treatment_selected: s_w,
        union,
        ridge_fallback: fit.ridge_fallback,
    };
    Ok((
        PointEstimate::new(fit.coefficients[0], Method::Dse, Estimand::Ate, n),
        detail,
    ))
}

/// Residual-balancing estimator: elastic-net outcome model on the reference
/// arm plus balancing weights that close the remaining covariate gap.
pub fn estimate_arbe(
    ds: &Dataset,
    cfg: &RunConfig,
    seed: u64,
    estimand: Estimand,
) -> Result<PointEstimate> {
    ds.require_both_arms()?;
    match estimand {
        Estimand::Att => {
            let value = arbe_one_side(ds, cfg, seed, 0, BalanceTarget::TreatedMeans)?;
            let mean_t = arm_mean(ds, 1);
            Ok(PointEstimate::new(
                mean_t - value,
                Method::Arbe,
                Estimand::Att,
                ds.n(),
            ))
        }
        Estimand::Ate => {
            // balance each arm toward the pooled covariate means
            let c_side = arbe_one_side(ds, cfg, derive_seed(seed, 1), 0, BalanceTarget::PooledMeans)?;
            let t_side = arbe_one_side(ds, cfg, derive_seed(seed, 2), 1, BalanceTarget::PooledMeans)?;
            Ok(PointEstimate::new(
                t_side - c_side,
                Method::Arbe,
                Estimand::Ate,
                ds.n(),
            ))
        }
        other => Err(Error::InvalidInput(format!(
            "residual balancing supports ate/att, not {other:?}"
        ))),
    }
}

/// Model-plus-weighted-residual prediction of the mean counterfactual outcome
/// for the target population, using the given arm as donors.
fn arbe_one_side(
    ds: &Dataset,
    cfg: &RunConfig,
    seed: u64,
    arm: u8,
    target: BalanceTarget,
) -> Result<f64> {
    let rows: Vec<usize> = (0..ds.n()).filter(|&i| ds.w()[i] == arm).collect();
    let xa = ds.x().select_rows(&rows);
    let ya: Vec<f64> = rows.iter().map(|&i| ds.y()[i]).collect();
    let fit = fit_outcome_model(&xa, &ya, cfg, cfg.linmod.prediction_rule, derive_seed2(seed, 31, arm as u64))?;

    let sol = balance::solve_balancing_weights_for_arm(
        ds.x(),
        ds.w(),
        arm,
        target,
        cfg.balance.zeta,
        cfg.balance.max_iter,
        cfg.balance.tol,
    )?;

    // model prediction at the target's mean covariates
    let target_rows: Vec<usize> = match target {
        BalanceTarget::TreatedMeans => ds.treated_indices(),
        BalanceTarget::PooledMeans => (0..ds.n()).collect(),
    };
    let d = ds.d();
    let mut xbar = vec![0.0; d];
    for &i in &target_rows {
        for j in 0..d {
            xbar[j] += ds.x().get(i, j);
        }
    }
    xbar.iter_mut().for_each(|v| *v /= target_rows.len() as f64);
    let base = fit.predict_row(&xbar);

    // weighted residual correction over the donors
    let mut corr = 0.0;
    for &i in &rows {
        corr += sol.lambda[i] * (ds.y()[i] - fit.predict_row(ds.x().row(i)));
    }
    Ok(base + corr)
}

fn arm_mean(ds: &Dataset, arm: u8) -> f64 {
    let rows: Vec<usize> = (0..ds.n()).filter(|&i| ds.w()[i] == arm).collect();
    rows.iter().map(|&i| ds.y()[i]).sum::<f64>() / rows.len() as f64
}

/// Plug-in score-equation estimator with nuisances fit on the full sample.
pub fn estimate_dre(
    ds: &Dataset,
    cfg: &RunConfig,
    seed: u64,
    estimand: Estimand,
) -> Result<PointEstimate> {
    ds.require_both_arms()?;
    let nuis = fit_nuisances(ds, cfg, derive_seed(seed, 41))?;
    super::dre_from_nuisances(ds, &nuis, estimand)
}

/// Cross-fit variant: K seed-deterministic folds stratified by treatment,
/// nuisances fit off-fold, per-fold score-equation estimates averaged.
pub fn estimate_dmle(
    ds: &Dataset,
    cfg: &RunConfig,
    seed: u64,
    estimand: Estimand,
) -> Result<PointEstimate> {
    let (est, _) = estimate_dmle_detailed(ds, cfg, seed, estimand)?;
    Ok(est)
}

pub fn estimate_dmle_detailed(
    ds: &Dataset,
    cfg: &RunConfig,
    seed: u64,
    estimand: Estimand,
) -> Result<(PointEstimate, Vec<f64>)> {
    ds.require_both_arms()?;
    let k = cfg.dml_folds;
    if k < 2 {
        return Err(Error::InvalidInput("dml_folds must be >= 2".into()));
    }
    let folds = stratified_folds(ds, k, seed, 100)?;

    let mut fold_estimates = Vec::with_capacity(k);
    for (fi, fold) in folds.iter().enumerate() {
        let train_idx: Vec<usize> = (0..ds.n()).filter(|i| !fold.contains(i)).collect();
        let train = ds.select(&train_idx);
        let eval = ds.select(fold);
        let model = fit_nuisance_model(&train, cfg, derive_seed2(seed, 42, fi as u64))?;
        let nuis = model.predict(&eval, cfg.clip_eta)?;
        let tau_k = match estimand {
            Estimand::Ate => solve_score_ate(&eval, &nuis),
            Estimand::Att => solve_score_att(&eval, &nuis),
            other => {
                return Err(Error::InvalidInput(format!(
                    "cross-fitting supports ate/att, not {other:?}"
                )))
            }
        };
        fold_estimates.push(tau_k);
    }
    let value = linalg::mean(&fold_estimates);
    Ok((
        PointEstimate::new(value, Method::Dmle, estimand, ds.n()),
        fold_estimates,
    ))
}

/// Seed-deterministic stratified partition: both arms are shuffled and dealt
/// round-robin, so every fold carries both arms whenever the arm counts allow
/// it. Retries with fresh shuffles before giving up.
pub fn stratified_folds(
    ds: &Dataset,
    k: usize,
    seed: u64,
    max_retries: usize,
) -> Result<Vec<Vec<usize>>> {
    for attempt in 0..max_retries.max(1) {
        let mut r = stream(derive_seed2(seed, 43, attempt as u64));
        let treated = ds.treated_indices();
        let controls = ds.control_indices();
        let t_order = shuffled_indices(treated.len(), &mut r);
        let c_order = shuffled_indices(controls.len(), &mut r);
        let mut folds = vec![Vec::new(); k];
        for (pos, &ti) in t_order.iter().enumerate() {
            folds[pos % k].push(treated[ti]);
        }
        // offset so control surplus does not always land on fold 0
        for (pos, &ci) in c_order.iter().enumerate() {
            folds[(pos + treated.len()) % k].push(controls[ci]);
        }
        let ok = folds.iter().all(|f| {
            let nt = f.iter().filter(|&&i| ds.w()[i] == 1).count();
            nt > 0 && nt < f.len()
        });
        if ok {
            for f in folds.iter_mut() {
                f.sort_unstable();
            }
            return Ok(folds);
        }
    }
    Err(Error::FoldArmEmpty {
        retries: max_retries,
    })
}
