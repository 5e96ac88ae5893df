//! Domain types shared by every module: the observed sample, the target
//! estimand, fitted nuisance functions, and run configuration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// The observed sample: covariates `X`, binary treatment `w`, outcome `y`.
///
/// Construction validates shape, finiteness, and the 0/1 treatment coding;
/// all fields are immutable afterwards.
#[derive(Debug, Clone)]
pub struct Dataset {
    x: Matrix<f64>,
    w: Vec<u8>,
    y: Vec<f64>,
    column_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        x: Matrix<f64>,
        w: Vec<u8>,
        y: Vec<f64>,
        column_names: Vec<String>,
    ) -> Result<Self> {
        let n = x.nrows();
        let d = x.ncols();
        if n < 2 {
            return Err(Error::TooFewRows { need: 2, got: n });
        }
        if d < 1 {
            return Err(Error::InvalidInput("need at least one covariate".into()));
        }
        if w.len() != n || y.len() != n {
            return Err(Error::InvalidInput(format!(
                "length mismatch: X has {n} rows, w has {}, y has {}",
                w.len(),
                y.len()
            )));
        }
        if column_names.len() != d {
            return Err(Error::InvalidInput(format!(
                "X has {d} columns but {} names given",
                column_names.len()
            )));
        }
        for (i, &wi) in w.iter().enumerate() {
            if wi > 1 {
                return Err(Error::NonBinaryTreatment {
                    row: i,
                    value: wi.to_string(),
                });
            }
        }
        for (i, &yi) in y.iter().enumerate() {
            if !yi.is_finite() {
                return Err(Error::NonFiniteValue {
                    row: i,
                    col: "outcome".into(),
                });
            }
        }
        for r in 0..n {
            for c in 0..d {
                if !x.get(r, c).is_finite() {
                    return Err(Error::NonFiniteValue {
                        row: r,
                        col: column_names[c].clone(),
                    });
                }
            }
        }
        Ok(Dataset { x, w, y, column_names })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &Matrix<f64> {
        &self.x
    }

    pub fn w(&self) -> &[u8] {
        &self.w
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn n_treated(&self) -> usize {
        self.w.iter().filter(|&&w| w == 1).count()
    }

    pub fn n_control(&self) -> usize {
        self.n() - self.n_treated()
    }

    pub fn treated_fraction(&self) -> f64 {
        self.n_treated() as f64 / self.n() as f64
    }

    pub fn treated_indices(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.w[i] == 1).collect()
    }

    pub fn control_indices(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.w[i] == 0).collect()
    }

    /// Both arms nonempty, required by every estimator.
    pub fn require_both_arms(&self) -> Result<()> {
        let nt = self.n_treated();
        if nt == 0 || nt == self.n() {
            return Err(Error::EmptyArm);
        }
        Ok(())
    }

    /// Subset of rows, preserving order. Panics on out-of-range indices.
    pub fn select(&self, idx: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_rows(idx),
            w: idx.iter().map(|&i| self.w[i]).collect(),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            column_names: self.column_names.clone(),
        }
    }
}

/// Raw rows prior to validation (one record per unit).
#[derive(Debug, Clone)]
pub struct RawRecord {
    pub covariates: Vec<f64>,
    pub treatment: f64,
    pub outcome: f64,
}

/// Validate raw records into a [`Dataset`].
///
/// Rejects ragged rows, non-binary treatments, and non-finite cells with a
/// specific error; column order is preserved.
pub fn validate_dataset(rows: &[RawRecord], column_names: Vec<String>) -> Result<Dataset> {
    if rows.is_empty() {
        return Err(Error::TooFewRows { need: 2, got: 0 });
    }
    let d = rows[0].covariates.len();
    for (i, r) in rows.iter().enumerate() {
        if r.covariates.len() != d {
            return Err(Error::InvalidInput(format!(
                "row {i} has {} covariates, expected {d}",
                r.covariates.len()
            )));
        }
    }
    let mut w = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        if !r.treatment.is_finite() {
            return Err(Error::NonFiniteValue {
                row: i,
                col: "treatment".into(),
            });
        }
        if r.treatment == 0.0 {
            w.push(0u8);
        } else if r.treatment == 1.0 {
            w.push(1u8);
        } else {
            return Err(Error::NonBinaryTreatment {
                row: i,
                value: format!("{}", r.treatment),
            });
        }
    }
    let y: Vec<f64> = rows.iter().map(|r| r.outcome).collect();
    let mut data = Vec::with_capacity(rows.len() * d);
    for r in rows {
        data.extend_from_slice(&r.covariates);
    }
    let x = Matrix::from_vec(rows.len(), d, data);
    Dataset::new(x, w, y, column_names)
}

/// Which average effect is targeted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Estimand {
    /// Population average treatment effect.
    Ate,
    /// Average effect among the treated.
    Att,
    /// Weighted average with weight e(x)(1-e(x)).
    OverlapWeighted,
    /// Indicator weight on alpha < e(x) < 1-alpha.
    Trimmed { alpha: f64 },
}

impl Estimand {
    pub fn validate(&self) -> Result<()> {
        if let Estimand::Trimmed { alpha } = self {
            if !(*alpha > 0.0 && *alpha < 0.5) {
                return Err(Error::InvalidInput(format!(
                    "trim alpha must be in (0, 0.5), got {alpha}"
                )));
            }
        }
        Ok(())
    }

    pub fn label(&self) -> &'static str {
        match self {
            Estimand::Ate => "ate",
            Estimand::Att => "att",
            Estimand::OverlapWeighted => "overlap",
            Estimand::Trimmed { .. } => "trimmed",
        }
    }
}

/// Per-unit estimand weights omega(X_i) as a function of fitted propensities.
pub fn weight_function(estimand: Estimand, ehat: &[f64]) -> Vec<f64> {
    match estimand {
        Estimand::Ate => vec![1.0; ehat.len()],
        Estimand::Att => ehat.to_vec(),
        Estimand::OverlapWeighted => ehat.iter().map(|&e| e * (1.0 - e)).collect(),
        Estimand::Trimmed { alpha } => ehat
            .iter()
            .map(|&e| if e > alpha && e < 1.0 - alpha { 1.0 } else { 0.0 })
            .collect(),
    }
}

/// Fitted nuisance functions evaluated at the sample points.
///
/// Propensities are clipped into `[clip_eta, 1 - clip_eta]` at construction so
/// no downstream denominator can blow up.
#[derive(Debug, Clone)]
pub struct NuisanceEstimates {
    pub ehat: Vec<f64>,
    pub mu0hat: Vec<f64>,
    pub mu1hat: Vec<f64>,
    pub sigma2_0hat: Option<Vec<f64>>,
    pub sigma2_1hat: Option<Vec<f64>>,
    pub phat: f64,
    pub clip_eta: f64,
}

impl NuisanceEstimates {
    pub fn new(
        ehat_raw: Vec<f64>,
        mu0hat: Vec<f64>,
        mu1hat: Vec<f64>,
        n_treated: usize,
        n: usize,
        clip_eta: f64,
    ) -> Result<Self> {
        if !(clip_eta > 0.0 && clip_eta < 0.5) {
            return Err(Error::InvalidInput(format!(
                "clip_eta must be in (0, 0.5), got {clip_eta}"
            )));
        }
        if ehat_raw.len() != n || mu0hat.len() != n || mu1hat.len() != n {
            return Err(Error::InvalidInput(
                "nuisance vectors must match the sample size".into(),
            ));
        }
        let ehat = ehat_raw
            .into_iter()
            .map(|e| e.clamp(clip_eta, 1.0 - clip_eta))
            .collect();
        Ok(NuisanceEstimates {
            ehat,
            mu0hat,
            mu1hat,
            sigma2_0hat: None,
            sigma2_1hat: None,
            phat: n_treated as f64 / n as f64,
            clip_eta,
        })
    }

    pub fn with_variances(mut self, sigma2_0: Vec<f64>, sigma2_1: Vec<f64>) -> Result<Self> {
        if sigma2_0.iter().chain(sigma2_1.iter()).any(|&v| v < 0.0) {
            return Err(Error::InvalidInput(
                "conditional variance estimates must be nonnegative".into(),
            ));
        }
        self.sigma2_0hat = Some(sigma2_0);
        self.sigma2_1hat = Some(sigma2_1);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.ehat.len()
    }
}

/// Estimator tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Naive,
    Ols,
    Dse,
    Arbe,
    Dre,
    Dmle,
    Ipw,
}

impl Method {
    pub const REPORT_SET: [Method; 6] = [
        Method::Naive,
        Method::Ols,
        Method::Dse,
        Method::Arbe,
        Method::Dre,
        Method::Dmle,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Naive => "naive",
            Method::Ols => "ols",
            Method::Dse => "dse",
            Method::Arbe => "arbe",
            Method::Dre => "dre",
            Method::Dmle => "dmle",
            Method::Ipw => "ipw",
        }
    }

    /// Stable id used when deriving RNG streams.
    pub fn stream_tag(&self) -> u64 {
        match self {
            Method::Naive => 1,
            Method::Ols => 2,
            Method::Dse => 3,
            Method::Arbe => 4,
            Method::Dre => 5,
            Method::Dmle => 6,
            Method::Ipw => 7,
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "naive" => Ok(Method::Naive),
            "ols" => Ok(Method::Ols),
            "dse" => Ok(Method::Dse),
            "arbe" => Ok(Method::Arbe),
            "dre" => Ok(Method::Dre),
            "dmle" => Ok(Method::Dmle),
            "ipw" => Ok(Method::Ipw),
            other => Err(Error::InvalidInput(format!("unknown method: {other}"))),
        }
    }
}

/// A point estimate with its standard error and provenance tags.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointEstimate {
    pub value: f64,
    pub se: f64,
    pub method: Method,
    pub estimand: Estimand,
    pub n_used: usize,
}

impl PointEstimate {
    pub fn new(value: f64, method: Method, estimand: Estimand, n_used: usize) -> Self {
        PointEstimate {
            value,
            se: 0.0,
            method,
            estimand,
            n_used,
        }
    }
}

/// Nuisance fitting backends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NuisanceFamily {
    /// Elastic-net outcome models and L1 logistic propensities.
    Linear,
    /// Random forests for both.
    Forest,
    /// Constant nuisances: ehat = e0, mu = 0. Used for diagnostics and tests.
    Fixed { e0: f64 },
}

/// Penalty selection rule after cross-validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaRule {
    Min,
    OneSe,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinmodConfig {
    /// Elastic-net mixing for outcome models (1 = pure L1).
    pub mix_outcome: f64,
    /// Mixing for treatment-model logistic fits.
    pub mix_treatment: f64,
    pub cv_folds: usize,
    pub lambda_grid_size: usize,
    pub max_sweeps: usize,
    pub tol: f64,
    /// Penalty rule for covariate-selection fits.
    pub selection_rule: LambdaRule,
    /// Penalty rule for prediction (nuisance) fits.
    pub prediction_rule: LambdaRule,
    /// Fall back to a tiny ridge when OLS normal equations are singular.
    pub ridge_fallback: bool,
}

impl Default for LinmodConfig {
    fn default() -> Self {
        LinmodConfig {
            mix_outcome: 0.9,
            mix_treatment: 1.0,
            cv_folds: 5,
            lambda_grid_size: 100,
            max_sweeps: 10_000,
            tol: 1e-7,
            selection_rule: LambdaRule::OneSe,
            prediction_rule: LambdaRule::Min,
            ridge_fallback: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Features tried per split; `None` means ceil(d/3).
    pub mtry: Option<usize>,
    pub min_leaf: usize,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 500,
            mtry: None,
            min_leaf: 5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BalanceConfig {
    /// Tradeoff between weight uniformity (1) and imbalance (0).
    pub zeta: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for BalanceConfig {
    fn default() -> Self {
        BalanceConfig {
            zeta: 0.5,
            max_iter: 50_000,
            tol: 1e-6,
        }
    }
}

/// Run-wide configuration. Everything an estimator or report run needs beyond
/// the data itself.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub bootstrap_reps: usize,
    pub half_sample_reps: usize,
    pub dml_folds: usize,
    pub trim_alpha: f64,
    pub clip_eta: f64,
    pub nuisance_family: NuisanceFamily,
    /// Use weight-normalized (Hajek) inverse-probability weighting.
    pub ipw_hajek: bool,
    pub forest: ForestConfig,
    pub linmod: LinmodConfig,
    pub balance: BalanceConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            bootstrap_reps: 1000,
            half_sample_reps: 200,
            dml_folds: 5,
            trim_alpha: 0.1,
            clip_eta: 0.01,
            nuisance_family: NuisanceFamily::Linear,
            ipw_hajek: false,
            forest: ForestConfig::default(),
            linmod: LinmodConfig::default(),
            balance: BalanceConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dml_folds < 2 {
            return Err(Error::InvalidInput("dml_folds must be >= 2".into()));
        }
        if self.bootstrap_reps < 1 || self.half_sample_reps < 1 {
            return Err(Error::InvalidInput("replicate counts must be >= 1".into()));
        }
        if !(self.trim_alpha > 0.0 && self.trim_alpha < 0.5) {
            return Err(Error::InvalidInput(format!(
                "trim_alpha must be in (0, 0.5), got {}",
                self.trim_alpha
            )));
        }
        if !(self.clip_eta > 0.0 && self.clip_eta < 0.5) {
            return Err(Error::InvalidInput(format!(
                "clip_eta must be in (0, 0.5), got {}",
                self.clip_eta
            )));
        }
        if !(0.0..=1.0).contains(&self.balance.zeta) {
            return Err(Error::InvalidInput("zeta must be in [0, 1]".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(covs: &[f64], w: f64, y: f64) -> RawRecord {
        RawRecord {
            covariates: covs.to_vec(),
            treatment: w,
            outcome: y,
        }
    }

    #[test]
    fn well_formed_rows_validate() {
        let rows = vec![
            record(&[0.0], 0.0, 1.0),
            record(&[0.0], 0.0, 3.0),
            record(&[1.0], 1.0, 2.0),
            record(&[1.0], 1.0, 4.0),
        ];
        let ds = validate_dataset(&rows, vec!["x1".into()]).unwrap();
        assert_eq!(ds.n(), 4);
        assert_eq!(ds.d(), 1);
        assert_eq!(ds.n_treated(), 2);
        assert_eq!(ds.column_names(), &["x1".to_string()]);
    }

    #[test]
    fn non_binary_treatment_rejected() {
        let rows = vec![record(&[0.0], 0.0, 1.0), record(&[1.0], 2.0, 2.0)];
        assert!(matches!(
            validate_dataset(&rows, vec!["x1".into()]),
            Err(Error::NonBinaryTreatment { row: 1, .. })
        ));
    }

    #[test]
    fn nan_outcome_rejected_with_location() {
        let rows = vec![record(&[0.0], 0.0, f64::NAN), record(&[1.0], 1.0, 2.0)];
        assert!(matches!(
            validate_dataset(&rows, vec!["x1".into()]),
            Err(Error::NonFiniteValue { row: 0, .. })
        ));
    }

    #[test]
    fn weight_function_matches_definitions() {
        assert_eq!(weight_function(Estimand::Ate, &[0.3, 0.7]), vec![1.0, 1.0]);
        let ow = weight_function(Estimand::OverlapWeighted, &[0.5, 0.1]);
        assert!((ow[0] - 0.25).abs() < 1e-15);
        assert!((ow[1] - 0.09).abs() < 1e-15);
        assert_eq!(
            weight_function(Estimand::Trimmed { alpha: 0.1 }, &[0.05, 0.5, 0.95]),
            vec![0.0, 1.0, 0.0]
        );
        assert_eq!(weight_function(Estimand::Att, &[0.3, 0.7]), vec![0.3, 0.7]);
    }

    #[test]
    fn nuisances_clip_propensities() {
        let nuis = NuisanceEstimates::new(
            vec![0.001, 0.5, 0.9999],
            vec![0.0; 3],
            vec![0.0; 3],
            1,
            3,
            0.01,
        )
        .unwrap();
        assert_eq!(nuis.ehat, vec![0.01, 0.5, 0.99]);
        assert!((nuis.phat - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn trimmed_estimand_requires_valid_alpha() {
        assert!(Estimand::Trimmed { alpha: 0.6 }.validate().is_err());
        assert!(Estimand::Trimmed { alpha: 0.0 }.validate().is_err());
        assert!(Estimand::Trimmed { alpha: 0.1 }.validate().is_ok());
    }
}
