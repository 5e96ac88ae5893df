//! Regularized linear models fit by coordinate descent: OLS, elastic net /
//! lasso, L1 logistic regression, and cross-validated penalty selection.
//!
//! Columns are standardized internally (constant columns get coefficient 0)
//! and the intercept is never penalized. Gaussian fits also standardize the
//! response, so the penalty acts on the unit-variance problem; reported
//! coefficients and intercepts are always on the original scale.

mod cv;
mod gaussian;
mod logistic;

pub use cv::{cv_select, make_folds, CvResult};
pub use gaussian::{fit_elastic_net, fit_ols, fit_ols_with_fallback};
pub use logistic::fit_logistic;

use crate::linalg::Matrix;
use crate::num::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Gaussian,
    Binomial,
}

/// Per-column centering and scaling used inside a fit.
#[derive(Debug, Clone)]
pub struct Standardization<F> {
    pub x_mean: Vec<F>,
    pub x_scale: Vec<F>,
    pub y_mean: F,
    pub y_scale: F,
}

/// A fitted (possibly penalized) linear model on the original data scale.
#[derive(Debug, Clone)]
pub struct LinearFit<F> {
    pub intercept: F,
    pub coefficients: Vec<F>,
    pub family: Family,
    pub lambda: F,
    pub mix: F,
    pub standardization: Standardization<F>,
    pub converged: bool,
    pub sweeps: usize,
    /// Internally minimized objective after each full sweep (standardized scale).
    pub objective_path: Vec<F>,
    /// OLS only: the normal equations were singular and a tiny ridge was used.
    pub ridge_fallback: bool,
}

impl<F: Scalar> LinearFit<F> {
    /// Linear predictor for one row of covariates.
    pub fn linear_predictor(&self, row: &[F]) -> F {
        self.intercept
            + row
                .iter()
                .zip(&self.coefficients)
                .fold(F::zero(), |acc, (&x, &b)| acc + x * b)
    }

    /// Prediction: identity for gaussian, probability for binomial.
    pub fn predict_row(&self, row: &[F]) -> F {
        let eta = self.linear_predictor(row);
        match self.family {
            Family::Gaussian => eta,
            Family::Binomial => sigmoid(eta),
        }
    }

    pub fn predict(&self, x: &Matrix<F>) -> Vec<F> {
        (0..x.nrows()).map(|r| self.predict_row(x.row(r))).collect()
    }

    /// Indices of nonzero coefficients.
    pub fn active_set(&self) -> Vec<usize> {
        self.coefficients
            .iter()
            .enumerate()
            .filter(|(_, &b)| b != F::zero())
            .map(|(j, _)| j)
            .collect()
    }
}

#[inline]
pub(crate) fn sigmoid<F: Scalar>(eta: F) -> F {
    if eta >= F::zero() {
        F::one() / (F::one() + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (F::one() + e)
    }
}

/// log(1 + exp(eta)) without overflow.
#[inline]
pub(crate) fn softplus<F: Scalar>(eta: F) -> F {
    eta.max(F::zero()) + (-eta.abs()).exp().ln_1p()
}

#[inline]
pub(crate) fn soft_threshold<F: Scalar>(z: F, t: F) -> F {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        F::zero()
    }
}

/// Standardized copy of the design: zero-mean columns, population sd 1.
/// Constant columns are left as all zeros and marked inactive.
pub(crate) struct StdDesign<F> {
    pub cols: Vec<Vec<F>>,
    pub active: Vec<bool>,
    /// dot(col, col)/n for each column (≈1; exact value used in updates).
    pub col_sq_n: Vec<F>,
    pub x_mean: Vec<F>,
    pub x_scale: Vec<F>,
    pub n: usize,
    pub d: usize,
}

impl<F: Scalar> StdDesign<F> {
    pub fn build(x: &Matrix<F>) -> Self {
        let n = x.nrows();
        let d = x.ncols();
        let nf = F::from_count(n);
        let mut cols = Vec::with_capacity(d);
        let mut active = vec![true; d];
        let mut col_sq_n = vec![F::zero(); d];
        let mut x_mean = vec![F::zero(); d];
        let mut x_scale = vec![F::one(); d];
        for j in 0..d {
            let mut col = x.col(j);
            let m = col.iter().copied().sum::<F>() / nf;
            let mut ss = F::zero();
            for v in col.iter_mut() {
                *v -= m;
                ss += *v * *v;
            }
            let s = (ss / nf).sqrt();
            x_mean[j] = m;
            if s == F::zero() {
                active[j] = false;
                for v in col.iter_mut() {
                    *v = F::zero();
                }
            } else {
                x_scale[j] = s;
                let mut sq = F::zero();
                for v in col.iter_mut() {
                    *v /= s;
                    sq += *v * *v;
                }
                col_sq_n[j] = sq / nf;
            }
            cols.push(col);
        }
        StdDesign {
            cols,
            active,
            col_sq_n,
            x_mean,
            x_scale,
            n,
            d,
        }
    }

    /// Largest penalty with an all-zero solution, given centered targets.
    pub fn lambda_max(&self, target_centered: &[F], mix: F) -> F {
        let nf = F::from_count(self.n);
        let mut m = F::zero();
        for j in 0..self.d {
            if !self.active[j] {
                continue;
            }
            let g = crate::linalg::dot(&self.cols[j], target_centered).abs() / nf;
            m = m.max(g);
        }
        m / mix.max(F::cast(1e-3))
    }
}

/// Elastic-net penalty value for standardized-scale coefficients.
pub(crate) fn penalty_value<F: Scalar>(beta: &[F], lambda: F, mix: F) -> F {
    let l1 = beta.iter().fold(F::zero(), |a, &b| a + b.abs());
    let l2 = beta.iter().fold(F::zero(), |a, &b| a + b * b);
    lambda * (mix * l1 + (F::one() - mix) * l2 / F::cast(2.0))
}

/// Maximum stationarity violation of a gaussian elastic-net fit, evaluated on
/// the standardized problem the solver actually minimizes. Zero at an exact
/// solution; used to audit solver output.
pub fn kkt_residual<F: Scalar>(x: &Matrix<F>, y: &[F], fit: &LinearFit<F>) -> F {
    assert_eq!(fit.family, Family::Gaussian);
    let design = StdDesign::build(x);
    let n = design.n;
    let nf = F::from_count(n);
    let y_mean = y.iter().copied().sum::<F>() / nf;
    let mut ss = F::zero();
    for &v in y {
        let c = v - y_mean;
        ss += c * c;
    }
    let y_scale = (ss / nf).sqrt();
    if y_scale == F::zero() {
        return F::zero();
    }
    let lam = fit.lambda / y_scale;
    let lam_l1 = lam * fit.mix;
    let lam_l2 = lam * (F::one() - fit.mix);

    // standardized-scale coefficients and residual
    let beta_std: Vec<F> = (0..design.d)
        .map(|j| fit.coefficients[j] * design.x_scale[j] / y_scale)
        .collect();
    let mut resid: Vec<F> = y.iter().map(|&v| (v - y_mean) / y_scale).collect();
    for j in 0..design.d {
        if beta_std[j] != F::zero() {
            for (r, c) in resid.iter_mut().zip(&design.cols[j]) {
                *r -= *c * beta_std[j];
            }
        }
    }
    let mut worst = F::zero();
    for j in 0..design.d {
        if !design.active[j] {
            continue;
        }
        let g = -crate::linalg::dot(&design.cols[j], &resid) / nf + lam_l2 * beta_std[j];
        let v = if beta_std[j] == F::zero() {
            (g.abs() - lam_l1).max(F::zero())
        } else {
            (g + lam_l1 * beta_std[j].signum()).abs()
        };
        worst = worst.max(v);
    }
    worst
}
