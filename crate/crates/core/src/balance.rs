//! Approximate balancing weights: reweight one arm so its covariate means
//! match a target, trading weight uniformity against worst-case imbalance.
//!
//! The solver minimizes `zeta*|w|_2^2 + (1-zeta)*max_j imbalance_j^2` over the
//! probability simplex on the reference arm, by projected subgradient steps
//! with backtracking; only objective-decreasing steps are accepted, so the
//! iterate path is monotone.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::{Dataset, Estimand, Method, PointEstimate};
use crate::num::Scalar;

/// Which covariate means the reweighted reference arm should match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BalanceTarget {
    TreatedMeans,
    PooledMeans,
}

#[derive(Debug, Clone)]
pub struct BalanceSolution<F> {
    /// Full-length weight vector; nonzero only on the reference arm, sums to 1.
    pub lambda: Vec<F>,
    /// Post-weighting mean differences in reference-arm sd units.
    /// Dropped (zero-variance) columns report the raw difference instead.
    pub imbalance: Vec<F>,
    pub objective: F,
    pub converged: bool,
    pub iterations: usize,
    /// Objective value after each accepted step (non-increasing).
    pub objective_path: Vec<F>,
    /// Columns excluded from the imbalance objective for having zero variance
    /// in the reference arm.
    pub dropped_covariates: Vec<usize>,
}

/// Solve for weights on the reference arm (`w == 0` units) matching `target`.
#[allow(clippy::too_many_arguments)]
pub fn solve_balancing_weights<F: Scalar>(
    x: &Matrix<F>,
    w: &[u8],
    target: BalanceTarget,
    zeta: F,
    max_iter: usize,
    tol: F,
) -> Result<BalanceSolution<F>> {
    solve_balancing_weights_for_arm(x, w, 0, target, zeta, max_iter, tol)
}

/// As [`solve_balancing_weights`] but reweighting the chosen arm (0 or 1).
#[allow(clippy::too_many_arguments)]
pub fn solve_balancing_weights_for_arm<F: Scalar>(
    x: &Matrix<F>,
    w: &[u8],
    reference_arm: u8,
    target: BalanceTarget,
    zeta: F,
    max_iter: usize,
    tol: F,
) -> Result<BalanceSolution<F>> {
    let n = x.nrows();
    let d = x.ncols();
    assert_eq!(w.len(), n);
    assert!(zeta >= F::zero() && zeta <= F::one(), "zeta must be in [0,1]");

    let reference: Vec<usize> = (0..n).filter(|&i| w[i] == reference_arm).collect();
    if reference.is_empty() {
        return Err(Error::EmptyReferenceArm);
    }
    let target_rows: Vec<usize> = match target {
        BalanceTarget::TreatedMeans => (0..n).filter(|&i| w[i] == 1).collect(),
        BalanceTarget::PooledMeans => (0..n).collect(),
    };
    if target_rows.is_empty() {
        return Err(Error::EmptyArm);
    }

    let m = reference.len();
    let mf = F::from_count(m);

    // target means, reference-arm scale
    let mut target_mean = vec![F::zero(); d];
    for &i in &target_rows {
        for j in 0..d {
            target_mean[j] += x.get(i, j);
        }
    }
    let tf = F::from_count(target_rows.len());
    target_mean.iter_mut().for_each(|v| *v /= tf);

    let mut dropped = Vec::new();
    let mut scale = vec![F::one(); d];
    let mut kept = Vec::new();
    for j in 0..d {
        let mut mean = F::zero();
        for &i in &reference {
            mean += x.get(i, j);
        }
        mean /= mf;
        let mut ss = F::zero();
        for &i in &reference {
            let c = x.get(i, j) - mean;
            ss += c * c;
        }
        let s = (ss / mf).sqrt();
        if s == F::zero() {
            dropped.push(j);
        } else {
            scale[j] = s;
            kept.push(j);
        }
    }

    // centered, scaled columns over the reference arm: imbalance_j = col_j . w
    let cols: Vec<Vec<F>> = kept
        .iter()
        .map(|&j| {
            reference
                .iter()
                .map(|&i| (x.get(i, j) - target_mean[j]) / scale[j])
                .collect()
        })
        .collect();

    let objective = |wv: &[F]| -> F {
        let sq = wv.iter().fold(F::zero(), |a, &v| a + v * v);
        let mut worst = F::zero();
        for col in &cols {
            let imb = crate::linalg::dot(col, wv);
            worst = worst.max(imb * imb);
        }
        zeta * sq + (F::one() - zeta) * worst
    };

    let mut wv = vec![F::one() / mf; m];
    let mut obj = objective(&wv);
    let mut objective_path = vec![obj];
    let mut step = F::one();
    let mut iterations = 0usize;
    let mut converged = false;
    let window = 50usize;
    let mut obj_window_start = obj;

    while iterations < max_iter {
        iterations += 1;

        // subgradient: 2*zeta*w + (1-zeta)*2*imb_{j*}*col_{j*}
        let mut worst = F::zero();
        let mut worst_col: Option<(usize, F)> = None;
        for (k, col) in cols.iter().enumerate() {
            let imb = crate::linalg::dot(col, &wv);
            if imb * imb > worst {
                worst = imb * imb;
                worst_col = Some((k, imb));
            }
        }
        let two = F::cast(2.0);
        let mut grad: Vec<F> = wv.iter().map(|&v| two * zeta * v).collect();
        if let Some((k, imb)) = worst_col {
            let c = two * (F::one() - zeta) * imb;
            for (g, v) in grad.iter_mut().zip(&cols[k]) {
                *g += c * *v;
            }
        }

        // backtracking projected step; accept only on decrease
        let mut accepted = false;
        let mut local = step;
        for _ in 0..60 {
            let cand: Vec<F> = wv.iter().zip(&grad).map(|(&v, &g)| v - local * g).collect();
            let cand = project_simplex(&cand);
            let cobj = objective(&cand);
            if cobj < obj {
                wv = cand;
                obj = cobj;
                objective_path.push(obj);
                step = local * F::cast(1.5);
                accepted = true;
                break;
            }
            local = local / two;
        }
        if !accepted {
            // no descent direction at working precision; treat as converged
            converged = true;
            break;
        }
        if iterations % window == 0 {
            if obj_window_start - obj <= tol * obj.max(F::one()) {
                converged = true;
                break;
            }
            obj_window_start = obj;
        }
    }

    // assemble full-length weights and the recomputed imbalance
    let mut lambda = vec![F::zero(); n];
    for (k, &i) in reference.iter().enumerate() {
        lambda[i] = wv[k];
    }
    let mut imbalance = vec![F::zero(); d];
    for j in 0..d {
        let mut wm = F::zero();
        for &i in &reference {
            wm += lambda[i] * x.get(i, j);
        }
        let diff = wm - target_mean[j];
        imbalance[j] = if dropped.contains(&j) { diff } else { diff / scale[j] };
    }

    Ok(BalanceSolution {
        lambda,
        imbalance,
        objective: obj,
        converged,
        iterations,
        objective_path,
        dropped_covariates: dropped,
    })
}

/// Euclidean projection onto the probability simplex.
fn project_simplex<F: Scalar>(v: &[F]) -> Vec<F> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = F::zero();
    let mut theta = F::zero();
    for (k, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - F::one()) / F::from_count(k + 1);
        if u - t > F::zero() {
            theta = t;
        }
    }
    v.iter().map(|&u| (u - theta).max(F::zero())).collect()
}

/// Weighted difference of arm means.
pub fn balancing_estimate(ds: &Dataset, lambda: &[f64]) -> Result<PointEstimate> {
    assert_eq!(lambda.len(), ds.n());
    let mut num_t = 0.0;
    let mut den_t = 0.0;
    let mut num_c = 0.0;
    let mut den_c = 0.0;
    for i in 0..ds.n() {
        if ds.w()[i] == 1 {
            num_t += lambda[i] * ds.y()[i];
            den_t += lambda[i];
        } else {
            num_c += lambda[i] * ds.y()[i];
            den_c += lambda[i];
        }
    }
    if den_t <= 0.0 || den_c <= 0.0 {
        return Err(Error::ZeroArmWeight);
    }
    let value = num_t / den_t - num_c / den_c;
    Ok(PointEstimate::new(value, Method::Arbe, Estimand::Att, ds.n()))
}
