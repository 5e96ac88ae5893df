//! Nuisance-function fitting shared by the score-based estimators.
//!
//! The default backend fits the propensity by cross-validated L1 logistic
//! regression and the arm-wise outcome means by cross-validated elastic net;
//! a random-forest backend (out-of-bag in-sample predictions) and a fixed
//! backend (for oracle injection in tests and randomized designs) are also
//! available.

use crate::error::Result;
use crate::forest::{self, ForestParams};
use crate::linalg::Matrix;
use crate::linmod::{self, Family};
use crate::model::LambdaRule;
use crate::model::{Dataset, NuisanceEstimates, NuisanceFamily, RunConfig};
use crate::rng::derive_seed2;

const STREAM_E: u64 = 11;
const STREAM_MU0: u64 = 12;
const STREAM_MU1: u64 = 13;
const STREAM_SIGMA: u64 = 14;

/// A fitted set of nuisance models that can predict at new covariate rows.
pub enum NuisanceModel {
    Linear {
        e: linmod::LinearFit<f64>,
        mu0: linmod::LinearFit<f64>,
        mu1: linmod::LinearFit<f64>,
    },
    Forest {
        e: forest::Forest<f64>,
        mu0: forest::Forest<f64>,
        mu1: forest::Forest<f64>,
        /// Row indices (into the training set) each outcome forest was fit on.
        control_rows: Vec<usize>,
        treated_rows: Vec<usize>,
    },
    Fixed { e0: f64 },
}

fn pick_lambda(cv: &linmod::CvResult<f64>, rule: LambdaRule) -> f64 {
    match rule {
        LambdaRule::Min => cv.lambda_min,
        LambdaRule::OneSe => cv.lambda_1se,
    }
}

/// Cross-validate and fit a gaussian elastic net, returning the final fit.
pub fn fit_outcome_model(
    x: &Matrix<f64>,
    y: &[f64],
    cfg: &RunConfig,
    rule: LambdaRule,
    seed: u64,
) -> Result<linmod::LinearFit<f64>> {
    let lm = &cfg.linmod;
    let cv = linmod::cv_select(
        x,
        y,
        Family::Gaussian,
        lm.cv_folds.min(x.nrows()).max(2),
        lm.mix_outcome,
        seed,
        lm.lambda_grid_size,
        lm.max_sweeps,
    )?;
    linmod::fit_elastic_net(x, y, pick_lambda(&cv, rule), lm.mix_outcome, lm.tol, lm.max_sweeps)
}

/// Cross-validate and fit an L1 logistic model for the treatment.
pub fn fit_treatment_model(
    x: &Matrix<f64>,
    w: &[u8],
    cfg: &RunConfig,
    rule: LambdaRule,
    seed: u64,
) -> Result<linmod::LinearFit<f64>> {
    let lm = &cfg.linmod;
    let wf: Vec<f64> = w.iter().map(|&v| f64::from(v)).collect();
    let cv = linmod::cv_select(
        x,
        &wf,
        Family::Binomial,
        lm.cv_folds.min(x.nrows()).max(2),
        lm.mix_treatment,
        seed,
        lm.lambda_grid_size,
        lm.max_sweeps,
    )?;
    linmod::fit_logistic(x, w, pick_lambda(&cv, rule), lm.mix_treatment, lm.tol, lm.max_sweeps)
}

/// Fit the nuisance models on a training sample.
pub fn fit_nuisance_model(train: &Dataset, cfg: &RunConfig, seed: u64) -> Result<NuisanceModel> {
    match cfg.nuisance_family {
        NuisanceFamily::Fixed { e0 } => Ok(NuisanceModel::Fixed { e0 }),
        NuisanceFamily::Linear => {
            let e = fit_treatment_model(
                train.x(),
                train.w(),
                cfg,
                cfg.linmod.prediction_rule,
                derive_seed2(seed, STREAM_E, 0),
            )?;
            let controls = train.control_indices();
            let treated = train.treated_indices();
            let xc = train.x().select_rows(&controls);
            let yc: Vec<f64> = controls.iter().map(|&i| train.y()[i]).collect();
            let mu0 = fit_outcome_model(
                &xc,
                &yc,
                cfg,
                cfg.linmod.prediction_rule,
                derive_seed2(seed, STREAM_MU0, 0),
            )?;
            let xt = train.x().select_rows(&treated);
            let yt: Vec<f64> = treated.iter().map(|&i| train.y()[i]).collect();
            let mu1 = fit_outcome_model(
                &xt,
                &yt,
                cfg,
                cfg.linmod.prediction_rule,
                derive_seed2(seed, STREAM_MU1, 0),
            )?;
            Ok(NuisanceModel::Linear { e, mu0, mu1 })
        }
        NuisanceFamily::Forest => {
            let params = ForestParams {
                n_trees: cfg.forest.n_trees,
                mtry: cfg.forest.mtry,
                min_leaf: cfg.forest.min_leaf,
            };
            let wf: Vec<f64> = train.w().iter().map(|&v| f64::from(v)).collect();
            let e = forest::fit_forest(train.x(), &wf, &params, derive_seed2(seed, STREAM_E, 1))?;
            let control_rows = train.control_indices();
            let treated_rows = train.treated_indices();
            let xc = train.x().select_rows(&control_rows);
            let yc: Vec<f64> = control_rows.iter().map(|&i| train.y()[i]).collect();
            let mu0 = forest::fit_forest(&xc, &yc, &params, derive_seed2(seed, STREAM_MU0, 1))?;
            let xt = train.x().select_rows(&treated_rows);
            let yt: Vec<f64> = treated_rows.iter().map(|&i| train.y()[i]).collect();
            let mu1 = forest::fit_forest(&xt, &yt, &params, derive_seed2(seed, STREAM_MU1, 1))?;
            Ok(NuisanceModel::Forest {
                e,
                mu0,
                mu1,
                control_rows,
                treated_rows,
            })
        }
    }
}

impl NuisanceModel {
    /// Predict nuisances at rows the models were NOT trained on.
    pub fn predict(&self, eval: &Dataset, clip_eta: f64) -> Result<NuisanceEstimates> {
        let (ehat, mu0, mu1) = match self {
            NuisanceModel::Fixed { e0 } => (
                vec![*e0; eval.n()],
                vec![0.0; eval.n()],
                vec![0.0; eval.n()],
            ),
            NuisanceModel::Linear { e, mu0, mu1 } => (
                e.predict(eval.x()),
                mu0.predict(eval.x()),
                mu1.predict(eval.x()),
            ),
            NuisanceModel::Forest { e, mu0, mu1, .. } => (
                e.predict(eval.x()),
                mu0.predict(eval.x()),
                mu1.predict(eval.x()),
            ),
        };
        NuisanceEstimates::new(ehat, mu0, mu1, eval.n_treated(), eval.n(), clip_eta)
    }

    /// Predict nuisances at the training rows themselves. Linear fits just
    /// evaluate; forests use out-of-bag predictions where the unit was in the
    /// training set of the given model.
    pub fn predict_in_sample(&self, train: &Dataset, clip_eta: f64) -> Result<NuisanceEstimates> {
        match self {
            NuisanceModel::Fixed { .. } | NuisanceModel::Linear { .. } => {
                self.predict(train, clip_eta)
            }
            NuisanceModel::Forest {
                e,
                mu0,
                mu1,
                control_rows,
                treated_rows,
            } => {
                let n = train.n();
                let ehat = forest::predict_oob(e, train.x()).values;

                let xc = train.x().select_rows(control_rows);
                let oob0 = forest::predict_oob(mu0, &xc).values;
                let mut mu0hat = mu0.predict(train.x());
                for (pos, &i) in control_rows.iter().enumerate() {
                    mu0hat[i] = oob0[pos];
                }
                let xt = train.x().select_rows(treated_rows);
                let oob1 = forest::predict_oob(mu1, &xt).values;
                let mut mu1hat = mu1.predict(train.x());
                for (pos, &i) in treated_rows.iter().enumerate() {
                    mu1hat[i] = oob1[pos];
                }
                NuisanceEstimates::new(ehat, mu0hat, mu1hat, train.n_treated(), n, clip_eta)
            }
        }
    }
}

/// Fit nuisances on the sample and evaluate them in-sample.
pub fn fit_nuisances(ds: &Dataset, cfg: &RunConfig, seed: u64) -> Result<NuisanceEstimates> {
    ds.require_both_arms()?;
    let model = fit_nuisance_model(ds, cfg, seed)?;
    model.predict_in_sample(ds, cfg.clip_eta)
}

/// Add conditional-variance estimates: within each arm, regress squared
/// residuals on the covariates with the outcome-model family and floor the
/// predictions at zero.
pub fn add_variance_estimates(
    ds: &Dataset,
    mut nuis: NuisanceEstimates,
    cfg: &RunConfig,
    seed: u64,
) -> Result<NuisanceEstimates> {
    let mut sigma = Vec::with_capacity(2);
    for arm in 0..2u8 {
        let rows: Vec<usize> = (0..ds.n()).filter(|&i| ds.w()[i] == arm).collect();
        let xa = ds.x().select_rows(&rows);
        let muhat = if arm == 0 { &nuis.mu0hat } else { &nuis.mu1hat };
        let sq: Vec<f64> = rows
            .iter()
            .map(|&i| {
                let r = ds.y()[i] - muhat[i];
                r * r
            })
            .collect();
        let fit = fit_outcome_model(
            &xa,
            &sq,
            cfg,
            cfg.linmod.prediction_rule,
            derive_seed2(seed, STREAM_SIGMA, arm as u64),
        )?;
        let pred: Vec<f64> = fit.predict(ds.x()).iter().map(|&v| v.max(0.0)).collect();
        sigma.push(pred);
    }
    let s1 = sigma.pop().expect("two arms");
    let s0 = sigma.pop().expect("two arms");
    nuis = nuis.with_variances(s0, s1)?;
    Ok(nuis)
}
