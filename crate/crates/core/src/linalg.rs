//! Sparse row-major designs and a Cholesky solver that names the columns it
//! cannot pivot on.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("rank-deficient design; linearly dependent columns: {}", .columns.join(", "))]
    RankDeficient { columns: Vec<String> },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

/// Relative pivot size below which a column counts as dependent.
const PIVOT_TOL: f64 = 1e-10;

/// Design matrix stored as (column, value) entries per row.
///
/// Indicator-coded models have a handful of nonzeros per row, so Gram
/// products are accumulated in O(rows * nnz^2).
#[derive(Debug, Clone, Default)]
pub struct SparseDesign {
    names: Vec<String>,
    rows: Vec<Vec<(u32, f64)>>,
}

impl SparseDesign {
    pub fn new(names: Vec<String>) -> Self {
        SparseDesign { names, rows: Vec::new() }
    }

    pub fn push_row(&mut self, entries: Vec<(u32, f64)>) {
        debug_assert!(entries.iter().all(|(c, _)| (*c as usize) < self.names.len()));
        self.rows.push(entries);
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn row(&self, i: usize) -> &[(u32, f64)] {
        &self.rows[i]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[(u32, f64)]> {
        self.rows.iter().map(Vec::as_slice)
    }

    /// Keeps the rows selected by `keep`, in order.
    pub fn select_rows(&self, keep: impl Fn(usize) -> bool) -> SparseDesign {
        SparseDesign {
            names: self.names.clone(),
            rows: (0..self.rows.len()).filter(|&i| keep(i)).map(|i| self.rows[i].clone()).collect(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows(), self.ncols());
        for (i, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                m[(i, c as usize)] += v;
            }
        }
        m
    }

    /// X'WX, with W = I when `weights` is `None`.
    pub fn gram(&self, weights: Option<&[f64]>) -> DMatrix<f64> {
        let p = self.ncols();
        let mut g = DMatrix::zeros(p, p);
        for (i, row) in self.rows.iter().enumerate() {
            let w = weights.map_or(1.0, |w| w[i]);
            for &(a, va) in row {
                for &(b, vb) in row {
                    if b >= a {
                        g[(a as usize, b as usize)] += w * va * vb;
                    }
                }
            }
        }
        g.fill_lower_triangle_with_upper_triangle();
        g
    }

    /// X'v
    pub fn transpose_mul(&self, v: &[f64]) -> DVector<f64> {
        let mut out = DVector::zeros(self.ncols());
        for (row, &vi) in self.rows.iter().zip(v) {
            for &(c, x) in row {
                out[c as usize] += x * vi;
            }
        }
        out
    }

    /// X beta
    pub fn mul(&self, beta: &DVector<f64>) -> Vec<f64> {
        self.rows.iter().map(|row| row.iter().map(|&(c, x)| x * beta[c as usize]).sum()).collect()
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: DMatrix<f64>,
}

impl Cholesky {
    /// Factors `a`. Columns whose pivot collapses relative to their diagonal
    /// are reported by name in the error.
    pub fn factor(a: &DMatrix<f64>, names: &[String]) -> Result<Self, LinalgError> {
        let n = a.nrows();
        if a.ncols() != n || names.len() != n {
            return Err(LinalgError::Dimension(format!(
                "{}x{} matrix with {} names",
                a.nrows(),
                a.ncols(),
                names.len()
            )));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite("normal matrix"));
        }
        let mut l = DMatrix::<f64>::zeros(n, n);
        let mut dependent = Vec::new();
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if d <= PIVOT_TOL * a[(j, j)].abs().max(f64::MIN_POSITIVE) || d <= 0.0 {
                // Zero the column so later pivots are judged without it.
                dependent.push(names[j].clone());
                continue;
            }
            let root = d.sqrt();
            l[(j, j)] = root;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / root;
            }
        }
        if !dependent.is_empty() {
            return Err(LinalgError::RankDeficient { columns: dependent });
        }
        Ok(Cholesky { l })
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let n = self.l.nrows();
        let mut z = b.clone();
        for i in 0..n {
            let mut s = z[i];
            for k in 0..i {
                s -= self.l[(i, k)] * z[k];
            }
            z[i] = s / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in (i + 1)..n {
                s -= self.l[(k, i)] * z[k];
            }
            z[i] = s / self.l[(i, i)];
        }
        z
    }
}

/// Solves `a x = b` for symmetric positive-definite `a`.
pub fn solve_spd(a: &DMatrix<f64>, b: &DVector<f64>, names: &[String]) -> Result<DVector<f64>, LinalgError> {
    Ok(Cholesky::factor(a, names)?.solve(b))
}

/// Least squares with an optional ridge penalty on every column except those
/// listed in `unpenalized`.
pub fn penalized_least_squares(
    x: &SparseDesign,
    y: &[f64],
    lambda: f64,
    unpenalized: &[usize],
) -> Result<DVector<f64>, LinalgError> {
    if y.len() != x.nrows() {
        return Err(LinalgError::Dimension(format!("{} rows but {} responses", x.nrows(), y.len())));
    }
    let mut g = x.gram(None);
    if lambda != 0.0 {
        for j in 0..x.ncols() {
            if !unpenalized.contains(&j) {
                g[(j, j)] += lambda;
            }
        }
    }
    solve_spd(&g, &x.transpose_mul(y), x.names())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("c{i}")).collect()
    }

    #[test]
    fn cholesky_matches_lu() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 2.0, 0.6, 2.0, 5.0, 1.0, 0.6, 1.0, 3.0]);
        let b = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let x = solve_spd(&a, &b, &names(3)).unwrap();
        let lu = a.clone().lu().solve(&b).unwrap();
        assert!((x - lu).amax() < 1e-14);
    }

    #[test]
    fn dependent_column_is_named() {
        let mut d = SparseDesign::new(vec!["intercept".into(), "a".into(), "b".into()]);
        // b duplicates a
        for i in 0..6 {
            let on = i % 2 == 0;
            let mut row = vec![(0, 1.0)];
            if on {
                row.push((1, 1.0));
                row.push((2, 1.0));
            }
            d.push_row(row);
        }
        let err = penalized_least_squares(&d, &[1.0; 6], 0.0, &[0]).unwrap_err();
        assert_eq!(err, LinalgError::RankDeficient { columns: vec!["b".into()] });
        // A ridge penalty restores definiteness.
        assert!(penalized_least_squares(&d, &[1.0; 6], 0.1, &[0]).is_ok());
    }

    #[test]
    fn sparse_products_agree_with_dense() {
        let mut d = SparseDesign::new(names(3));
        d.push_row(vec![(0, 1.0), (2, 2.0)]);
        d.push_row(vec![(1, -1.0)]);
        d.push_row(vec![(0, 0.5), (1, 3.0), (2, 1.0)]);
        let x = d.to_dense();
        let w = [1.0, 2.0, 0.5];
        let wm = DMatrix::from_diagonal(&DVector::from_row_slice(&w));
        assert!((d.gram(Some(&w)) - x.transpose() * wm * &x).amax() < 1e-14);
        let v = [0.3, -1.0, 2.0];
        assert!((d.transpose_mul(&v) - x.transpose() * DVector::from_row_slice(&v)).amax() < 1e-14);
        let beta = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let xb = d.mul(&beta);
        assert!((DVector::from_vec(xb) - &x * beta).amax() < 1e-14);
    }
}
