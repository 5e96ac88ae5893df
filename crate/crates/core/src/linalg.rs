//! Minimal dense linear algebra: a row-major matrix and a pivoted LU solve.
//!
//! The regression problems here are tall and thin (n up to a few thousand,
//! d up to ~100), so normal equations plus an LU solve are all that is needed.

use crate::error::{Error, Result};
use crate::num::Scalar;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Scalar> Matrix<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![F::zero(); rows * cols],
        }
    }

    /// Build from row slices; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<F>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Matrix { rows: r, cols: c, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<F>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Matrix { rows, cols, data }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> F {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: F) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[F] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn col(&self, c: usize) -> Vec<F> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    /// Select a subset of rows, preserving order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &r in idx {
            data.extend_from_slice(self.row(r));
        }
        Matrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    /// Select a subset of columns, preserving order.
    pub fn select_cols(&self, idx: &[usize]) -> Self {
        let mut out = Matrix::zeros(self.rows, idx.len());
        for r in 0..self.rows {
            for (k, &c) in idx.iter().enumerate() {
                out.set(r, k, self.get(r, c));
            }
        }
        out
    }

    pub fn matvec(&self, v: &[F]) -> Vec<F> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(v)
                    .fold(F::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    pub fn col_mean(&self, c: usize) -> F {
        let mut s = F::zero();
        for r in 0..self.rows {
            s += self.get(r, c);
        }
        s / F::from_count(self.rows)
    }

    /// Population standard deviation of a column.
    pub fn col_std(&self, c: usize) -> F {
        let m = self.col_mean(c);
        let mut s = F::zero();
        for r in 0..self.rows {
            let d = self.get(r, c) - m;
            s += d * d;
        }
        (s / F::from_count(self.rows)).sqrt()
    }
}

/// Solve the symmetric system `a x = b` in place via LU with partial pivoting.
///
/// Fails with [`Error::RankDeficient`] when the largest available pivot falls
/// below `1e-10` relative to the matrix infinity norm.
pub fn solve<F: Scalar>(a: &Matrix<F>, b: &[F]) -> Result<Vec<F>> {
    let n = a.nrows();
    assert_eq!(a.ncols(), n);
    assert_eq!(b.len(), n);
    let mut lu = a.data.clone();
    let mut x: Vec<F> = b.to_vec();
    let norm = lu
        .iter()
        .fold(F::zero(), |acc, &v| acc.max(v.abs()))
        .max(F::one());
    let tol = F::cast(1e-10) * norm;

    for k in 0..n {
        // pivot
        let mut p = k;
        let mut pmax = lu[k * n + k].abs();
        for r in (k + 1)..n {
            let v = lu[r * n + k].abs();
            if v > pmax {
                pmax = v;
                p = r;
            }
        }
        if pmax <= tol {
            return Err(Error::RankDeficient {
                pivot: pmax.as_f64(),
            });
        }
        if p != k {
            for c in 0..n {
                lu.swap(k * n + c, p * n + c);
            }
            x.swap(k, p);
        }
        let piv = lu[k * n + k];
        for r in (k + 1)..n {
            let f = lu[r * n + k] / piv;
            if f != F::zero() {
                for c in (k + 1)..n {
                    let v = lu[k * n + c];
                    lu[r * n + c] -= f * v;
                }
                let xk = x[k];
                x[r] -= f * xk;
            }
            lu[r * n + k] = f;
        }
    }
    // back substitution
    for k in (0..n).rev() {
        let mut s = x[k];
        for c in (k + 1)..n {
            s -= lu[k * n + c] * x[c];
        }
        x[k] = s / lu[k * n + k];
    }
    Ok(x)
}

/// Gram matrix `X'X` of the given design.
pub fn xtx<F: Scalar>(x: &Matrix<F>) -> Matrix<F> {
    let d = x.ncols();
    let mut g = Matrix::zeros(d, d);
    for r in 0..x.nrows() {
        let row = x.row(r);
        for i in 0..d {
            let xi = row[i];
            if xi == F::zero() {
                continue;
            }
            for j in i..d {
                let v = g.get(i, j) + xi * row[j];
                g.set(i, j, v);
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            let v = g.get(j, i);
            g.set(i, j, v);
        }
    }
    g
}

/// `X'y` of the given design.
pub fn xty<F: Scalar>(x: &Matrix<F>, y: &[F]) -> Vec<F> {
    let d = x.ncols();
    let mut out = vec![F::zero(); d];
    for r in 0..x.nrows() {
        let row = x.row(r);
        let yr = y[r];
        for j in 0..d {
            out[j] += row[j] * yr;
        }
    }
    out
}

pub fn dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).fold(F::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn mean<F: Scalar>(v: &[F]) -> F {
    if v.is_empty() {
        return F::zero();
    }
    v.iter().copied().sum::<F>() / F::from_count(v.len())
}

/// Population variance (divides by n).
pub fn variance<F: Scalar>(v: &[F]) -> F {
    let m = mean(v);
    if v.is_empty() {
        return F::zero();
    }
    v.iter().map(|&x| (x - m) * (x - m)).sum::<F>() / F::from_count(v.len())
}

/// Sample standard deviation (divides by n-1).
pub fn sample_sd<F: Scalar>(v: &[F]) -> F {
    if v.len() < 2 {
        return F::zero();
    }
    let m = mean(v);
    let ss = v.iter().map(|&x| (x - m) * (x - m)).sum::<F>();
    (ss / F::from_count(v.len() - 1)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_known_system() {
        // [[2,1],[1,3]] x = [3,5] -> x = [4/5, 7/5]
        let a: Matrix<f64> = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]);
        let x = solve(&a, &[3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-12);
        assert!((x[1] - 1.4).abs() < 1e-12);
    }

    #[test]
    fn solve_singular_reports_rank_deficient() {
        let a: Matrix<f64> = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(matches!(
            solve(&a, &[1.0, 2.0]),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn gram_and_xty_agree_with_direct_products() {
        let x = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]);
        let g = xtx(&x);
        assert_eq!(g.get(0, 0), 35.0);
        assert_eq!(g.get(0, 1), 44.0);
        assert_eq!(g.get(1, 0), 44.0);
        assert_eq!(g.get(1, 1), 56.0);
        let v = xty(&x, &[1.0, 1.0, 1.0]);
        assert_eq!(v, vec![9.0, 12.0]);
    }

    #[test]
    fn solve_permuted_rows_needs_pivoting() {
        // leading zero forces a row swap
        let a: Matrix<f64> = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let x = solve(&a, &[2.0, 3.0]).unwrap();
        assert_eq!(x, vec![3.0, 2.0]);
    }
}
