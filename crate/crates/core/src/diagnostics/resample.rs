//! Resampling diagnostics: bootstrap standard errors, half-sample bias, and
//! covariate-split sensitivity.
//!
//! Replicate-level work is keyed by `(seed, replicate_index)` and collected
//! into index-ordered slots, so results are identical however the replicates
//! are scheduled.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::estimate;
use crate::linalg;
use crate::model::{Dataset, Estimand, Method, RunConfig};
use crate::rng::{derive_seed2, resample_indices, shuffled_indices, stream};

const STREAM_BOOT: u64 = 0x626f6f74;
const STREAM_HALF: u64 = 0x68616c66;

fn failure_budget_exceeded(failed: usize, total: usize) -> bool {
    failed * 10 > total
}

/// Standard deviation of the estimator over `b` with-replacement resamples.
/// Everything, nuisance fits included, is refit inside each replicate.
pub fn bootstrap_se(
    method: Method,
    ds: &Dataset,
    cfg: &RunConfig,
    b: usize,
    seed: u64,
    estimand: Estimand,
) -> Result<f64> {
    if b < 2 {
        return Err(Error::InvalidInput("bootstrap needs at least 2 reps".into()));
    }
    let replicates: Vec<Option<f64>> = (0..b)
        .into_par_iter()
        .map(|rep| {
            let rep_seed = derive_seed2(seed, STREAM_BOOT, rep as u64);
            let mut r = stream(rep_seed);
            let idx = resample_indices(ds.n(), &mut r);
            let sub = ds.select(&idx);
            estimate(method, &sub, cfg, rep_seed, estimand)
                .ok()
                .map(|e| e.value)
        })
        .collect();
    let values: Vec<f64> = replicates.iter().flatten().copied().collect();
    let failed = b - values.len();
    if failure_budget_exceeded(failed, b) {
        return Err(Error::TooManyFailedReplicates { failed, total: b });
    }
    Ok(linalg::sample_sd(&values))
}

/// Scaled half-sample bias: the average of half-sample estimates minus the
/// full-sample estimate, in bootstrap-standard-error units.
///
/// Each repetition splits the sample into two near-equal halves without
/// replacement and runs the estimator on both. A zero numerator yields an
/// exact zero whatever the scale.
#[allow(clippy::too_many_arguments)]
pub fn half_sample_bias(
    method: Method,
    ds: &Dataset,
    cfg: &RunConfig,
    reps: usize,
    seed: u64,
    estimand: Estimand,
    se: Option<f64>,
) -> Result<f64> {
    if ds.n() < 4 {
        return Err(Error::TooFewRows { need: 4, got: ds.n() });
    }
    let full = estimate(method, ds, cfg, seed, estimand)?.value;
    let se = match se {
        Some(v) => v,
        None => bootstrap_se(method, ds, cfg, cfg.bootstrap_reps, seed, estimand)?,
    };

    let halves: Vec<[Option<f64>; 2]> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let rep_seed = derive_seed2(seed, STREAM_HALF, rep as u64);
            let mut r = stream(rep_seed);
            let order = shuffled_indices(ds.n(), &mut r);
            let half = ds.n() / 2;
            let mut lo = order[..half].to_vec();
            let mut hi = order[half..].to_vec();
            lo.sort_unstable();
            hi.sort_unstable();
            let run = |idx: &[usize], tag: u64| {
                estimate(
                    method,
                    &ds.select(idx),
                    cfg,
                    derive_seed2(rep_seed, 1, tag),
                    estimand,
                )
                .ok()
                .map(|e| e.value)
            };
            [run(&lo, 0), run(&hi, 1)]
        })
        .collect();

    let values: Vec<f64> = halves.iter().flatten().flatten().copied().collect();
    let failed = 2 * reps - values.len();
    if failure_budget_exceeded(failed, 2 * reps) {
        return Err(Error::TooManyFailedReplicates {
            failed,
            total: 2 * reps,
        });
    }
    let numerator = linalg::mean(&values) - full;
    if numerator == 0.0 {
        return Ok(0.0);
    }
    if se == 0.0 {
        return Err(Error::InvalidInput(
            "half-sample bias undefined: zero bootstrap standard error".into(),
        ));
    }
    Ok(numerator / se)
}

/// Why a covariate was left out of the split analysis.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitSkipReason {
    ConstantColumn,
    NearConstantSplit,
    ArmMissingInSubsample,
    EstimatorFailed,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SkippedCovariate {
    pub index: usize,
    pub name: String,
    pub reason: SplitSkipReason,
}

#[derive(Debug, Clone)]
pub struct CovariateSplit {
    /// Average of the two subsample estimates, per usable covariate.
    pub per_covariate: Vec<(usize, f64)>,
    pub skipped: Vec<SkippedCovariate>,
    pub mean: f64,
    /// Population standard deviation across covariates.
    pub std: f64,
}

/// Indices either side of a median split of column `j`; ties go low.
fn median_split(ds: &Dataset, j: usize) -> (Vec<usize>, Vec<usize>) {
    let col = ds.x().col(j);
    let med = type7_quantile_of(&col, 0.5);
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for (i, &v) in col.iter().enumerate() {
        if v <= med {
            lo.push(i);
        } else {
            hi.push(i);
        }
    }
    (lo, hi)
}

fn type7_quantile_of(values: &[f64], p: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    super::bias::type7_quantile_sorted(&sorted, p)
}

/// Split the sample at each covariate's median in turn, estimate on both
/// subsamples, and average the two estimates.
pub fn covariate_split_sensitivity(
    method: Method,
    ds: &Dataset,
    cfg: &RunConfig,
    seed: u64,
    estimand: Estimand,
) -> Result<CovariateSplit> {
    let plans: Vec<std::result::Result<(usize, Vec<usize>, Vec<usize>), SkippedCovariate>> = (0
        ..ds.d())
        .map(|j| {
            let name = ds.column_names()[j].clone();
            let col = ds.x().col(j);
            let first = col[0];
            if col.iter().all(|&v| v == first) {
                return Err(SkippedCovariate {
                    index: j,
                    name,
                    reason: SplitSkipReason::ConstantColumn,
                });
            }
            let (lo, hi) = median_split(ds, j);
            let minority = lo.len().min(hi.len());
            if minority * 20 <= ds.n() {
                return Err(SkippedCovariate {
                    index: j,
                    name,
                    reason: SplitSkipReason::NearConstantSplit,
                });
            }
            for side in [&lo, &hi] {
                let nt = side.iter().filter(|&&i| ds.w()[i] == 1).count();
                if nt == 0 || nt == side.len() {
                    return Err(SkippedCovariate {
                        index: j,
                        name,
                        reason: SplitSkipReason::ArmMissingInSubsample,
                    });
                }
            }
            Ok((j, lo, hi))
        })
        .collect();

    let results: Vec<std::result::Result<(usize, f64), SkippedCovariate>> = plans
        .into_par_iter()
        .map(|plan| {
            let (j, lo, hi) = plan?;
            let run = |idx: &[usize], tag: u64| {
                estimate(
                    method,
                    &ds.select(idx),
                    cfg,
                    derive_seed2(seed, j as u64, tag),
                    estimand,
                )
            };
            match (run(&lo, 0), run(&hi, 1)) {
                (Ok(a), Ok(b)) => Ok((j, 0.5 * (a.value + b.value))),
                _ => Err(SkippedCovariate {
                    index: j,
                    name: ds.column_names()[j].clone(),
                    reason: SplitSkipReason::EstimatorFailed,
                }),
            }
        })
        .collect();

    let mut per_covariate = Vec::new();
    let mut skipped = Vec::new();
    for r in results {
        match r {
            Ok(pair) => per_covariate.push(pair),
            Err(s) => skipped.push(s),
        }
    }
    if per_covariate.is_empty() {
        return Err(Error::AllSplitsFailed);
    }
    let values: Vec<f64> = per_covariate.iter().map(|&(_, v)| v).collect();
    let mean = linalg::mean(&values);
    let std = linalg::variance(&values).sqrt();
    Ok(CovariateSplit {
        per_covariate,
        skipped,
        mean,
        std,
    })
}
