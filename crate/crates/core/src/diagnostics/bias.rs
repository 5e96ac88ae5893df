//! The bias-function summary: how much of the naive gap is attributable to
//! covariates that move both the treatment rate and the outcome.
//!
//! Per unit, `b_i = (e_i - p) * (p*(mu0_i - mu0bar) + (1-p)*(mu1_i - mu1bar))`,
//! reported in outcome-standard-deviation units. Its average, rescaled by
//! `1/(p(1-p))`, estimates the bias of the naive difference in means.

use serde::Serialize;

use crate::error::Result;
use crate::forest::{self, ForestParams};
use crate::linalg;
use crate::model::{Dataset, ForestConfig};
use crate::rng::derive_seed2;

#[derive(Debug, Clone, Serialize)]
pub struct HistogramBin {
    pub bin_left: f64,
    pub bin_right: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct BiasFunctionSummary {
    /// Per-unit values scaled by std(y). Not serialized into reports.
    #[serde(skip)]
    pub b_values: Vec<f64>,
    pub mean: f64,
    pub q025: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub q975: f64,
    pub histogram: Vec<HistogramBin>,
    /// Population standard deviation of the outcome used for scaling.
    pub outcome_sd: f64,
    /// Sample treated fraction used in the construction.
    pub phat: f64,
    /// True when std(y) = 0 and the values are reported as zeros.
    pub degenerate_outcome: bool,
}

/// Type-7 quantile (linear interpolation) of an ascending-sorted slice.
pub fn type7_quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
}

fn equal_width_histogram(values: &[f64], bins: usize) -> Vec<HistogramBin> {
    let bins = bins.max(1);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return vec![HistogramBin {
            bin_left: lo,
            bin_right: hi,
            count: values.len(),
        }];
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        let mut k = ((v - lo) / width) as usize;
        if k >= bins {
            k = bins - 1; // right edge inclusive
        }
        counts[k] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| HistogramBin {
            bin_left: lo + k as f64 * width,
            bin_right: if k + 1 == bins { hi } else { lo + (k + 1) as f64 * width },
            count,
        })
        .collect()
}

/// Assemble the summary from already-computed nuisance values.
///
/// `ehat`, `mu0hat`, `mu1hat` are predictions at every sample point; `phat`
/// is the sample treated fraction.
pub fn bias_summary_from_nuisances(
    y: &[f64],
    ehat: &[f64],
    mu0hat: &[f64],
    mu1hat: &[f64],
    phat: f64,
    bins: usize,
) -> BiasFunctionSummary {
    let n = y.len();
    let sd_y = linalg::variance(y).sqrt();
    if sd_y == 0.0 {
        let zeros = vec![0.0; n];
        let histogram = equal_width_histogram(&zeros, bins);
        return BiasFunctionSummary {
            b_values: zeros,
            mean: 0.0,
            q025: 0.0,
            q25: 0.0,
            median: 0.0,
            q75: 0.0,
            q975: 0.0,
            histogram,
            outcome_sd: 0.0,
            phat,
            degenerate_outcome: true,
        };
    }
    let mu0bar = linalg::mean(mu0hat);
    let mu1bar = linalg::mean(mu1hat);
    let b_values: Vec<f64> = (0..n)
        .map(|i| {
            let b = (ehat[i] - phat)
                * (phat * (mu0hat[i] - mu0bar) + (1.0 - phat) * (mu1hat[i] - mu1bar));
            b / sd_y
        })
        .collect();
    let mut sorted = b_values.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    BiasFunctionSummary {
        mean: linalg::mean(&b_values),
        q025: type7_quantile_sorted(&sorted, 0.025),
        q25: type7_quantile_sorted(&sorted, 0.25),
        median: type7_quantile_sorted(&sorted, 0.5),
        q75: type7_quantile_sorted(&sorted, 0.75),
        q975: type7_quantile_sorted(&sorted, 0.975),
        histogram: equal_width_histogram(&b_values, bins),
        b_values,
        outcome_sd: sd_y,
        phat,
        degenerate_outcome: false,
    }
}

/// Forest-based summary: propensity and arm-wise outcome means estimated by
/// random forests, out-of-bag for units in the respective training sets.
/// Forest propensities are clipped like every other propensity fit.
pub fn bias_function_summary(
    ds: &Dataset,
    forest_cfg: &ForestConfig,
    seed: u64,
    bins: usize,
) -> Result<BiasFunctionSummary> {
    bias_function_summary_clipped(ds, forest_cfg, seed, bins, 0.01)
}

pub fn bias_function_summary_clipped(
    ds: &Dataset,
    forest_cfg: &ForestConfig,
    seed: u64,
    bins: usize,
    clip_eta: f64,
) -> Result<BiasFunctionSummary> {
    let params = ForestParams {
        n_trees: forest_cfg.n_trees,
        mtry: forest_cfg.mtry,
        min_leaf: forest_cfg.min_leaf,
    };
    let wf: Vec<f64> = ds.w().iter().map(|&v| f64::from(v)).collect();
    let e_forest = forest::fit_forest(ds.x(), &wf, &params, derive_seed2(seed, 61, 0))?;
    let ehat: Vec<f64> = forest::predict_oob(&e_forest, ds.x())
        .values
        .into_iter()
        .map(|e| e.clamp(clip_eta, 1.0 - clip_eta))
        .collect();

    let mut arm_preds: Vec<Vec<f64>> = Vec::with_capacity(2);
    for arm in 0..2u8 {
        let rows: Vec<usize> = (0..ds.n()).filter(|&i| ds.w()[i] == arm).collect();
        let xa = ds.x().select_rows(&rows);
        let ya: Vec<f64> = rows.iter().map(|&i| ds.y()[i]).collect();
        let f = forest::fit_forest(&xa, &ya, &params, derive_seed2(seed, 62, arm as u64))?;
        let mut pred = f.predict(ds.x());
        let oob = forest::predict_oob(&f, &xa).values;
        for (pos, &i) in rows.iter().enumerate() {
            pred[i] = oob[pos];
        }
        arm_preds.push(pred);
    }
    let mu1hat = arm_preds.pop().expect("two arms");
    let mu0hat = arm_preds.pop().expect("two arms");
    Ok(bias_summary_from_nuisances(
        ds.y(),
        &ehat,
        &mu0hat,
        &mu1hat,
        ds.treated_fraction(),
        bins,
    ))
}

/// The naive-estimator bias implied by the summary, on the outcome scale:
/// `mean(b) / (p(1-p))`, unscaled by std(y).
pub fn aggregate_bias(summary: &BiasFunctionSummary, phat: f64) -> f64 {
    if summary.degenerate_outcome {
        return 0.0;
    }
    summary.outcome_sd * summary.mean / (phat * (1.0 - phat))
}

/// CSV rendering of the histogram: `bin_left,bin_right,count` per line.
pub fn histogram_csv(summary: &BiasFunctionSummary) -> String {
    let mut out = String::from("bin_left,bin_right,count\n");
    for bin in &summary.histogram {
        out.push_str(&format!("{},{},{}\n", bin.bin_left, bin.bin_right, bin.count));
    }
    out
}
