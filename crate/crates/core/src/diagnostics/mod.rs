//! Report assembly: every requested estimator with its standard error,
//! trimmed variant, half-sample bias, and covariate-split sensitivity, plus
//! the bias-function summary and the overlap (variance-bound) comparison.

pub mod bias;
mod resample;

pub use bias::{
    aggregate_bias, bias_function_summary, bias_function_summary_clipped,
    bias_summary_from_nuisances, histogram_csv, type7_quantile_sorted, BiasFunctionSummary,
    HistogramBin,
};
pub use resample::{
    bootstrap_se, covariate_split_sensitivity, half_sample_bias, CovariateSplit,
    SkippedCovariate, SplitSkipReason,
};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::{
    add_variance_estimates, dre_from_nuisances, estimate, fit_nuisances, trimmed_estimate,
    variance_bound, weighted_estimate,
};
use crate::model::{Dataset, Estimand, Method, NuisanceEstimates, RunConfig};
use crate::rng::derive_seed2;

#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub method: Method,
    pub estimate: Option<f64>,
    pub se: Option<f64>,
    pub trimmed: Option<f64>,
    pub sbb: Option<f64>,
    pub covsplit_mean: Option<f64>,
    pub covsplit_std: Option<f64>,
    /// One entry per failed cell, naming the cell and the error.
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundsSection {
    /// Mean squared efficient score at the average-effect estimate.
    pub ate_bound: Option<f64>,
    /// Overlap-weighted bound, `1/mean(omega^2)` normalization.
    pub weighted_bound: Option<f64>,
    /// weighted_bound / ate_bound; well under 1 flags overlap trouble.
    pub ratio: Option<f64>,
    /// The same weighted bound under the `1/mean(omega)^2` normalization.
    pub weighted_bound_alt_norm: Option<f64>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BiasSection {
    #[serde(flatten)]
    pub summary: BiasFunctionSummary,
    /// Implied naive-estimator bias on the outcome scale.
    pub aggregate: f64,
    /// Naive estimate minus the score-based reference estimate, when both
    /// were available: the empirical counterpart of `aggregate`.
    pub naive_minus_reference: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportMeta {
    pub seed: u64,
    pub n: usize,
    pub d: usize,
    pub estimand: Estimand,
    pub methods: Vec<Method>,
    pub config: RunConfig,
    pub config_hash: String,
    pub skipped_covariates: Vec<SkippedCovariate>,
    pub failed_cells: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsReport {
    pub rows: Vec<ReportRow>,
    pub bias_summary: Option<BiasSection>,
    pub bounds: BoundsSection,
    pub meta: ReportMeta,
}

impl DiagnosticsReport {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn any_row_succeeded(&self) -> bool {
        self.rows.iter().any(|r| r.estimate.is_some())
    }

    pub fn bias_histogram_csv(&self) -> Option<String> {
        self.bias_summary.as_ref().map(|b| histogram_csv(&b.summary))
    }
}

fn fnv1a(data: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in data {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

const TASK_ESTIMATE: u64 = 1;
const TASK_BOOT: u64 = 2;
const TASK_TRIM: u64 = 3;
const TASK_SBB: u64 = 4;
const TASK_SPLIT: u64 = 5;
const TASK_NUIS: u64 = 90;
const TASK_BIAS: u64 = 91;

fn record<T>(cell: &str, out: Result<T>, notes: &mut Vec<String>) -> Option<T> {
    match out {
        Ok(v) => Some(v),
        Err(e) => {
            notes.push(format!("{cell}: {e}"));
            None
        }
    }
}

/// Run every requested method with its full diagnostic row and assemble the
/// report. Individual cell failures are recorded in the row notes; only an
/// empty method list is an error.
pub fn build_report(
    ds: &Dataset,
    methods: &[Method],
    cfg: &RunConfig,
    seed: u64,
    estimand: Estimand,
) -> Result<DiagnosticsReport> {
    if methods.is_empty() {
        return Err(Error::InvalidInput("no methods requested".into()));
    }
    cfg.validate()?;

    // shared nuisances for trimming and the bound comparison
    let mut bound_notes = Vec::new();
    let nuis: Option<NuisanceEstimates> = match fit_nuisances(ds, cfg, derive_seed2(seed, TASK_NUIS, 0))
        .and_then(|n| add_variance_estimates(ds, n, cfg, derive_seed2(seed, TASK_NUIS, 1)))
    {
        Ok(n) => Some(n),
        Err(e) => {
            bound_notes.push(format!("nuisance fit: {e}"));
            None
        }
    };

    let mut rows = Vec::with_capacity(methods.len());
    for &method in methods {
        let tag = method.stream_tag();
        let mut notes = Vec::new();
        let est = record(
            "estimate",
            estimate(method, ds, cfg, derive_seed2(seed, tag, TASK_ESTIMATE), estimand),
            &mut notes,
        )
        .map(|e| e.value);
        let se = record(
            "se",
            bootstrap_se(
                method,
                ds,
                cfg,
                cfg.bootstrap_reps,
                derive_seed2(seed, tag, TASK_BOOT),
                estimand,
            ),
            &mut notes,
        );
        let trimmed = match &nuis {
            Some(nuis) => record(
                "trimmed",
                trimmed_estimate(
                    ds,
                    nuis,
                    cfg.trim_alpha,
                    method,
                    cfg,
                    derive_seed2(seed, tag, TASK_TRIM),
                    estimand,
                ),
                &mut notes,
            )
            .map(|e| e.value),
            None => {
                notes.push("trimmed: skipped, no propensity fit".into());
                None
            }
        };
        let sbb = record(
            "sbb",
            half_sample_bias(
                method,
                ds,
                cfg,
                cfg.half_sample_reps,
                derive_seed2(seed, tag, TASK_SBB),
                estimand,
                se,
            ),
            &mut notes,
        );
        let split = record(
            "covsplit",
            covariate_split_sensitivity(
                method,
                ds,
                cfg,
                derive_seed2(seed, tag, TASK_SPLIT),
                estimand,
            ),
            &mut notes,
        );
        let (covsplit_mean, covsplit_std) = match &split {
            Some(s) => (Some(s.mean), Some(s.std)),
            None => (None, None),
        };
        rows.push(ReportRow {
            method,
            estimate: est,
            se,
            trimmed,
            sbb,
            covsplit_mean,
            covsplit_std,
            notes,
        });
    }

    // structural skip list is method independent; take it from a cheap run
    let skipped_covariates = covariate_split_sensitivity(
        Method::Naive,
        ds,
        cfg,
        derive_seed2(seed, 0, TASK_SPLIT),
        estimand,
    )
    .map(|s| s.skipped)
    .unwrap_or_default();

    // bias summary and its comparison to the estimates
    let mut bias_summary = None;
    match bias::bias_function_summary_clipped(ds, &cfg.forest, derive_seed2(seed, TASK_BIAS, 0), 20, cfg.clip_eta) {
        Ok(summary) => {
            let aggregate = aggregate_bias(&summary, ds.treated_fraction());
            let naive = rows
                .iter()
                .find(|r| r.method == Method::Naive)
                .and_then(|r| r.estimate);
            let reference = rows
                .iter()
                .find(|r| matches!(r.method, Method::Dre | Method::Dmle))
                .and_then(|r| r.estimate);
            let naive_minus_reference = match (naive, reference) {
                (Some(a), Some(b)) => Some(a - b),
                _ => None,
            };
            bias_summary = Some(BiasSection {
                summary,
                aggregate,
                naive_minus_reference,
            });
        }
        Err(e) => bound_notes.push(format!("bias summary: {e}")),
    }

    // overlap comparison via the two variance bounds
    let bounds = match &nuis {
        Some(nuis) => {
            let mut notes = bound_notes;
            let ate = record(
                "ate bound",
                dre_from_nuisances(ds, nuis, Estimand::Ate)
                    .and_then(|tau| variance_bound(ds, nuis, Estimand::Ate, tau.value)),
                &mut notes,
            );
            let weighted = record(
                "weighted bound",
                weighted_estimate(ds, nuis, Estimand::OverlapWeighted).and_then(|tau| {
                    variance_bound(ds, nuis, Estimand::OverlapWeighted, tau.value)
                }),
                &mut notes,
            );
            let ratio = match (&ate, &weighted) {
                (Some(a), Some(w)) if a.value > 0.0 => Some(w.value / a.value),
                _ => None,
            };
            BoundsSection {
                ate_bound: ate.map(|b| b.value),
                weighted_bound: weighted.as_ref().map(|b| b.value),
                ratio,
                weighted_bound_alt_norm: weighted.and_then(|b| b.alt_value),
                notes,
            }
        }
        None => BoundsSection {
            ate_bound: None,
            weighted_bound: None,
            ratio: None,
            weighted_bound_alt_norm: None,
            notes: bound_notes,
        },
    };

    let config_json = serde_json::to_string(cfg).expect("config serializes");
    let failed_cells = rows.iter().map(|r| r.notes.len()).sum::<usize>() + bounds.notes.len();
    Ok(DiagnosticsReport {
        rows,
        bias_summary,
        bounds,
        meta: ReportMeta {
            seed,
            n: ds.n(),
            d: ds.d(),
            estimand,
            methods: methods.to_vec(),
            config: cfg.clone(),
            config_hash: format!("{:016x}", fnv1a(config_json.as_bytes())),
            skipped_covariates,
            failed_cells,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::synth::{generate_synthetic, preset};

    fn small_cfg() -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.bootstrap_reps = 30;
        cfg.half_sample_reps = 10;
        cfg.dml_folds = 2;
        cfg.forest.n_trees = 60;
        cfg.linmod.lambda_grid_size = 25;
        cfg.linmod.cv_folds = 3;
        cfg
    }

    #[test]
    fn single_method_smoke_report() {
        let spec = preset("randomized", 60).unwrap();
        let s = generate_synthetic(&spec, 3).unwrap();
        let report =
            build_report(&s.dataset, &[Method::Naive], &small_cfg(), 5, Estimand::Att).unwrap();
        assert_eq!(report.rows.len(), 1);
        let row = &report.rows[0];
        assert!(row.estimate.is_some());
        assert!(row.se.is_some());
        assert!(row.trimmed.is_some());
        assert!(row.sbb.is_some());
        assert!(row.covsplit_mean.is_some());
        assert!(report.bias_summary.is_some());
        assert!(report.bounds.ate_bound.is_some());
        assert!(report.any_row_succeeded());
    }

    #[test]
    fn same_seed_produces_byte_identical_json() {
        let spec = preset("confounded_linear", 80).unwrap();
        let s = generate_synthetic(&spec, 9).unwrap();
        let cfg = small_cfg();
        let a = build_report(&s.dataset, &[Method::Naive, Method::Dre], &cfg, 11, Estimand::Att)
            .unwrap()
            .to_json_string();
        let b = build_report(&s.dataset, &[Method::Naive, Method::Dre], &cfg, 11, Estimand::Att)
            .unwrap()
            .to_json_string();
        assert_eq!(a, b);
        let c = build_report(&s.dataset, &[Method::Naive, Method::Dre], &cfg, 12, Estimand::Att)
            .unwrap()
            .to_json_string();
        assert_ne!(a, c);
    }

    #[test]
    fn empty_method_list_rejected() {
        let spec = preset("randomized", 40).unwrap();
        let s = generate_synthetic(&spec, 1).unwrap();
        assert!(build_report(&s.dataset, &[], &small_cfg(), 1, Estimand::Att).is_err());
    }

    #[test]
    fn report_json_has_the_agreed_field_names() {
        let spec = preset("randomized", 50).unwrap();
        let s = generate_synthetic(&spec, 2).unwrap();
        let report =
            build_report(&s.dataset, &[Method::Naive], &small_cfg(), 7, Estimand::Att).unwrap();
        let json: serde_json::Value = serde_json::from_str(&report.to_json_string()).unwrap();
        let row = &json["rows"][0];
        for key in ["method", "estimate", "se", "trimmed", "sbb", "covsplit_mean", "covsplit_std"]
        {
            assert!(!row[key].is_null() || row.get(key).is_some(), "missing {key}");
        }
        assert!(json["bias_summary"]["histogram"].is_array());
        assert!(json["bounds"].get("ate_bound").is_some());
        assert!(json["meta"].get("config_hash").is_some());
        assert!(json["meta"]["seed"].is_u64());
    }
}
