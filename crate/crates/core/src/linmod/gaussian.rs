//! OLS and gaussian elastic net.

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

use crate::num::Scalar;

use super::{penalty_value, soft_threshold, Family, LinearFit, Standardization, StdDesign};

/// Ordinary least squares via the normal equations.
///
/// Fails with [`Error::RankDeficient`] when a pivot falls below the relative
/// threshold; see [`fit_ols_with_fallback`] for the ridge-rescued variant.
pub fn fit_ols<F: Scalar>(x: &Matrix<F>, y: &[F], intercept: bool) -> Result<LinearFit<F>> {
    fit_ols_impl(x, y, intercept, None)
}

/// OLS that falls back to a small ridge penalty when the normal equations are
/// singular. The returned fit has `ridge_fallback = true` in that case.
pub fn fit_ols_with_fallback<F: Scalar>(
    x: &Matrix<F>,
    y: &[F],
    intercept: bool,
    ridge: F,
) -> Result<LinearFit<F>> {
    match fit_ols_impl(x, y, intercept, None) {
        Err(Error::RankDeficient { .. }) => fit_ols_impl(x, y, intercept, Some(ridge)),
        other => other,
    }
}

fn fit_ols_impl<F: Scalar>(
    x: &Matrix<F>,
    y: &[F],
    intercept: bool,
    ridge: Option<F>,
) -> Result<LinearFit<F>> {
    let n = x.nrows();
    let d = x.ncols();
    assert_eq!(y.len(), n);
    let p = d + usize::from(intercept);
    // design with optional leading constant column
    let mut design = Matrix::zeros(n, p);
    for r in 0..n {
        let mut c = 0;
        if intercept {
            design.set(r, 0, F::one());
            c = 1;
        }
        for j in 0..d {
            design.set(r, c + j, x.get(r, j));
        }
    }
    let mut gram = linalg::xtx(&design);
    if let Some(eps) = ridge {
        let start = usize::from(intercept);
        for j in start..p {
            let v = gram.get(j, j) + eps;
            gram.set(j, j, v);
        }
    }
    let rhs = linalg::xty(&design, y);
    let sol = linalg::solve(&gram, &rhs)?;
    let (b0, coefs) = if intercept {
        (sol[0], sol[1..].to_vec())
    } else {
        (F::zero(), sol)
    };
    Ok(LinearFit {
        intercept: b0,
        coefficients: coefs,
        family: Family::Gaussian,
        lambda: F::zero(),
        mix: F::zero(),
        standardization: Standardization {
            x_mean: vec![F::zero(); d],
            x_scale: vec![F::one(); d],
            y_mean: F::zero(),
            y_scale: F::one(),
        },
        converged: true,
        sweeps: 0,
        objective_path: Vec::new(),
        ridge_fallback: ridge.is_some(),
    })
}

/// Elastic net by cyclic coordinate descent.
///
/// Minimizes `(1/2n)·RSS + lambda·(mix·|b|_1 + (1-mix)/2·|b|_2^2)` on the
/// standardized problem (unit-variance columns and response).
pub fn fit_elastic_net<F: Scalar>(
    x: &Matrix<F>,
    y: &[F],
    lambda: F,
    mix: F,
    tol: F,
    max_sweeps: usize,
) -> Result<LinearFit<F>> {
    let design = StdDesign::build(x);
    let mut beta = vec![F::zero(); design.d];
    fit_elastic_net_warm(&design, y, lambda, mix, tol, max_sweeps, &mut beta, true)
}

/// Same solver with a caller-owned warm start on the standardized scale.
/// Used by the cross-validation path.
#[allow(clippy::too_many_arguments)]
pub(crate) fn fit_elastic_net_warm<F: Scalar>(
    design: &StdDesign<F>,
    y: &[F],
    lambda: F,
    mix: F,
    tol: F,
    max_sweeps: usize,
    beta: &mut Vec<F>,
    record_objective: bool,
) -> Result<LinearFit<F>> {
    assert!(lambda >= F::zero(), "lambda must be nonnegative");
    assert!(
        mix >= F::zero() && mix <= F::one(),
        "mix must be in [0, 1]"
    );
    let n = design.n;
    let nf = F::from_count(n);
    assert_eq!(y.len(), n);

    let y_mean = y.iter().copied().sum::<F>() / nf;
    let mut ss = F::zero();
    for &v in y {
        let c = v - y_mean;
        ss += c * c;
    }
    let y_scale = (ss / nf).sqrt();

    // constant response: intercept-only fit
    if y_scale == F::zero() {
        return Ok(finish_gaussian(
            design,
            vec![F::zero(); design.d],
            y_mean,
            y_scale,
            lambda,
            mix,
            true,
            0,
            Vec::new(),
        ));
    }

    let ys: Vec<F> = y.iter().map(|&v| (v - y_mean) / y_scale).collect();
    // penalty on the unit-variance response scale
    let lam = lambda / y_scale;
    let lam_l1 = lam * mix;
    let lam_l2 = lam * (F::one() - mix);

    // residual of the standardized problem
    let mut resid = ys.clone();
    for j in 0..design.d {
        if beta[j] != F::zero() {
            let b = beta[j];
            for (r, c) in resid.iter_mut().zip(&design.cols[j]) {
                *r -= *c * b;
            }
        }
    }

    let mut objective_path = Vec::new();
    let mut converged = false;
    let mut sweeps = 0;
    let mut last_step = F::zero();
    let kkt_tol = tol.max(F::cast(1e-9));

    while sweeps < max_sweeps {
        sweeps += 1;
        let mut max_step = F::zero();
        for j in 0..design.d {
            if !design.active[j] {
                continue;
            }
            let old = beta[j];
            let grad = linalg::dot(&design.cols[j], &resid) / nf;
            let z = grad + old * design.col_sq_n[j];
            let new = soft_threshold(z, lam_l1) / (design.col_sq_n[j] + lam_l2);
            if new != old {
                let delta = new - old;
                for (r, c) in resid.iter_mut().zip(&design.cols[j]) {
                    *r -= *c * delta;
                }
                beta[j] = new;
                max_step = max_step.max(delta.abs());
            }
        }
        if record_objective {
            let rss = linalg::dot(&resid, &resid) / (F::cast(2.0) * nf);
            objective_path.push(rss + penalty_value(beta, lam, mix));
        }
        last_step = max_step;
        if max_step < tol {
            if kkt_satisfied(design, &resid, beta, lam_l1, lam_l2, kkt_tol) {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            max_sweeps,
            last_step: last_step.as_f64(),
        });
    }
    Ok(finish_gaussian(
        design,
        beta.clone(),
        y_mean,
        y_scale,
        lambda,
        mix,
        converged,
        sweeps,
        objective_path,
    ))
}

fn kkt_satisfied<F: Scalar>(
    design: &StdDesign<F>,
    resid: &[F],
    beta: &[F],
    lam_l1: F,
    lam_l2: F,
    tol: F,
) -> bool {
    let nf = F::from_count(design.n);
    for j in 0..design.d {
        if !design.active[j] {
            continue;
        }
        let g = -linalg::dot(&design.cols[j], resid) / nf + lam_l2 * beta[j];
        if beta[j] == F::zero() {
            if g.abs() > lam_l1 + tol {
                return false;
            }
        } else if (g + lam_l1 * beta[j].signum()).abs() > tol {
            return false;
        }
    }
    true
}

#[allow(clippy::too_many_arguments)]
fn finish_gaussian<F: Scalar>(
    design: &StdDesign<F>,
    beta_std: Vec<F>,
    y_mean: F,
    y_scale: F,
    lambda: F,
    mix: F,
    converged: bool,
    sweeps: usize,
    objective_path: Vec<F>,
) -> LinearFit<F> {
    // de-standardize: b_j = y_scale * beta_j / x_scale_j
    let ysc = if y_scale == F::zero() { F::one() } else { y_scale };
    let mut coefs = vec![F::zero(); design.d];
    let mut dot_mean = F::zero();
    for j in 0..design.d {
        if design.active[j] && beta_std[j] != F::zero() {
            coefs[j] = ysc * beta_std[j] / design.x_scale[j];
            dot_mean += coefs[j] * design.x_mean[j];
        }
    }
    LinearFit {
        intercept: y_mean - dot_mean,
        coefficients: coefs,
        family: Family::Gaussian,
        lambda,
        mix,
        standardization: Standardization {
            x_mean: design.x_mean.clone(),
            x_scale: design.x_scale.clone(),
            y_mean,
            y_scale,
        },
        converged,
        sweeps,
        objective_path,
        ridge_fallback: false,
    }
}
