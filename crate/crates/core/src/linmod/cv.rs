//! Cross-validated penalty selection over a descending lambda grid.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::num::Scalar;
use crate::rng;

use super::{gaussian, logistic, sigmoid, Family, StdDesign};

/// Cross-validation curve and the two standard selection points.
#[derive(Debug, Clone)]
pub struct CvResult<F> {
    /// Strictly descending penalty grid (original response scale).
    pub lambda_grid: Vec<F>,
    /// Mean validation loss per grid point; `None` marks a failed point.
    pub cv_error: Vec<Option<F>>,
    /// Standard error of the fold losses per grid point.
    pub cv_se: Vec<Option<F>>,
    pub lambda_min: F,
    pub lambda_1se: F,
}

/// Deterministic fold assignment: shuffled indices dealt into `k` blocks.
pub fn make_folds(n: usize, k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut r = rng::stream(seed);
    let idx = rng::shuffled_indices(n, &mut r);
    let mut folds = vec![Vec::new(); k];
    for (pos, &i) in idx.iter().enumerate() {
        folds[pos % k].push(i);
    }
    folds
}

/// K-fold cross-validation of the elastic-net / logistic penalty.
///
/// Grid: `grid_size` log-spaced points from `lambda_max` down to
/// `1e-4 * lambda_max`. Loss is mean squared error for gaussian fits and mean
/// negative log-likelihood for binomial ones. Grid points whose fit fails in
/// any fold are excluded from selection.
#[allow(clippy::too_many_arguments)]
pub fn cv_select<F: Scalar>(
    x: &Matrix<F>,
    y: &[F],
    family: Family,
    folds: usize,
    mix: F,
    seed: u64,
    grid_size: usize,
    max_sweeps: usize,
) -> Result<CvResult<F>> {
    let n = x.nrows();
    if folds < 2 || folds > n {
        return Err(Error::InvalidInput(format!(
            "folds must be in [2, n]; got {folds} with n={n}"
        )));
    }

    // grid anchored at the full-sample lambda_max
    let full = StdDesign::build(x);
    let lambda_max = match family {
        Family::Gaussian => {
            let ym = y.iter().copied().sum::<F>() / F::from_count(n);
            let yc: Vec<F> = y.iter().map(|&v| v - ym).collect();
            full.lambda_max(&yc, mix)
        }
        Family::Binomial => {
            let wm = y.iter().copied().sum::<F>() / F::from_count(n);
            let wc: Vec<F> = y.iter().map(|&v| v - wm).collect();
            full.lambda_max(&wc, mix)
        }
    };
    let lambda_max = if lambda_max > F::zero() {
        lambda_max
    } else {
        F::cast(1e-3)
    };
    let grid = log_grid(lambda_max, grid_size);

    let fold_idx = make_folds(n, folds, seed);
    let mut fold_losses: Vec<Vec<Option<F>>> = Vec::with_capacity(folds);

    for val in &fold_idx {
        let train: Vec<usize> = (0..n).filter(|i| !val.contains(i)).collect();
        let xt = x.select_rows(&train);
        let yt: Vec<F> = train.iter().map(|&i| y[i]).collect();
        let xv = x.select_rows(val);
        let yv: Vec<F> = val.iter().map(|&i| y[i]).collect();
        fold_losses.push(path_losses(
            &xt, &yt, &xv, &yv, family, &grid, mix, max_sweeps,
        ));
    }

    let kf = F::from_count(folds);
    let mut cv_error = Vec::with_capacity(grid.len());
    let mut cv_se = Vec::with_capacity(grid.len());
    for g in 0..grid.len() {
        let pts: Vec<F> = fold_losses.iter().filter_map(|f| f[g]).collect();
        if pts.len() < folds {
            cv_error.push(None);
            cv_se.push(None);
            continue;
        }
        let m = pts.iter().copied().sum::<F>() / kf;
        let var = pts.iter().map(|&v| (v - m) * (v - m)).sum::<F>()
            / (kf * (kf - F::one()).max(F::one()));
        cv_error.push(Some(m));
        cv_se.push(Some(var.sqrt()));
    }

    // argmin scanning from the largest lambda; ties keep the larger penalty
    let mut best: Option<(usize, F)> = None;
    for (g, e) in cv_error.iter().enumerate() {
        if let Some(e) = e {
            if best.map_or(true, |(_, b)| *e < b) {
                best = Some((g, *e));
            }
        }
    }
    let (gmin, emin) = best.ok_or(Error::InvalidInput(
        "every cross-validation grid point failed".into(),
    ))?;
    let se_min = cv_se[gmin].unwrap_or(F::zero());
    let cutoff = emin + se_min;
    let mut g1se = gmin;
    for g in 0..=gmin {
        if let Some(e) = cv_error[g] {
            if e <= cutoff {
                g1se = g;
                break;
            }
        }
    }

    Ok(CvResult {
        lambda_min: grid[gmin],
        lambda_1se: grid[g1se],
        lambda_grid: grid,
        cv_error,
        cv_se,
    })
}

fn log_grid<F: Scalar>(lambda_max: F, size: usize) -> Vec<F> {
    let size = size.max(2);
    let lo = F::cast(1e-4);
    let ratio = lo.powf(F::one() / F::from_count(size - 1));
    let mut grid = Vec::with_capacity(size);
    let mut v = lambda_max;
    for _ in 0..size {
        grid.push(v);
        v = v * ratio;
    }
    grid
}

/// Warm-started path fit on one training set, scored on one validation set.
#[allow(clippy::too_many_arguments)]
fn path_losses<F: Scalar>(
    xt: &Matrix<F>,
    yt: &[F],
    xv: &Matrix<F>,
    yv: &[F],
    family: Family,
    grid: &[F],
    mix: F,
    max_sweeps: usize,
) -> Vec<Option<F>> {
    let design = StdDesign::build(xt);
    let tol = F::cast(1e-7);
    let mut beta = vec![F::zero(); design.d];
    let mut beta0 = F::zero();
    let mut losses = Vec::with_capacity(grid.len());
    let nv = F::from_count(yv.len());

    for &lam in grid {
        let fit = match family {
            Family::Gaussian => gaussian::fit_elastic_net_warm(
                &design, yt, lam, mix, tol, max_sweeps, &mut beta, false,
            ),
            Family::Binomial => {
                let w: Vec<u8> = yt.iter().map(|&v| u8::from(v > F::cast(0.5))).collect();
                logistic::fit_logistic_warm(
                    &design,
                    &w,
                    lam,
                    mix,
                    tol,
                    max_sweeps,
                    &mut beta,
                    &mut beta0,
                    false,
                )
            }
        };
        match fit {
            Ok(fit) => {
                let mut loss = F::zero();
                for r in 0..xv.nrows() {
                    let eta = fit.linear_predictor(xv.row(r));
                    match family {
                        Family::Gaussian => {
                            let e = yv[r] - eta;
                            loss += e * e;
                        }
                        Family::Binomial => {
                            let p = sigmoid(eta)
                                .max(F::cast(1e-12))
                                .min(F::one() - F::cast(1e-12));
                            loss -= yv[r] * p.ln() + (F::one() - yv[r]) * (F::one() - p).ln();
                        }
                    }
                }
                losses.push(Some(loss / nv));
            }
            Err(_) => {
                losses.push(None);
                // reset the warm start so later grid points are unaffected
                beta.iter_mut().for_each(|b| *b = F::zero());
                beta0 = F::zero();
            }
        }
    }
    losses
}
