//! Dense row-major design matrix.

use crate::error::{Error, Result};

/// The fixed design: entry `(i, j)` holds the j-th regressor evaluated at
/// observation i. Immutable after construction and freely shared across
/// threads.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    n: usize,
    p: usize,
    data: Vec<f64>,
}

impl DesignMatrix {
    pub fn from_row_major(n: usize, p: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(Error::InvalidDesign(format!(
                "need at least one row and one column, got {n} x {p}"
            )));
        }
        if data.len() != n * p {
            return Err(Error::InvalidDesign(format!(
                "expected {} entries for a {n} x {p} matrix, got {}",
                n * p,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDesign(format!(
                "non-finite entry at row {}, column {}",
                pos / p,
                pos % p
            )));
        }
        Ok(Self { n, p, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::InvalidDesign("ragged rows".into()));
        }
        Self::from_row_major(n, p, rows.concat())
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.p + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.p..(i + 1) * self.p]
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.entry(i, j))
    }

    #[inline]
    pub fn row_dot(&self, i: usize, v: &[f64]) -> f64 {
        self.row(i).iter().zip(v).map(|(x, w)| x * w).sum()
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row_dot(i, v)).collect()
    }

    /// `X^T u` for `u` of length `n`.
    pub fn transpose_matvec(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.p];
        for (i, ui) in u.iter().enumerate() {
            for (j, out_j) in out.iter_mut().enumerate() {
                *out_j += self.entry(i, j) * ui;
            }
        }
        out
    }

    pub fn column_norm_sq(&self, j: usize) -> f64 {
        self.column(j).map(|x| x * x).sum()
    }

    pub fn max_column_norm(&self) -> f64 {
        (0..self.p)
            .map(|j| self.column_norm_sq(j).sqrt())
            .fold(0.0, f64::max)
    }

    /// `X^T X`, row-major p x p.
    pub fn gram(&self) -> Vec<f64> {
        let mut g = vec![0.0; self.p * self.p];
        for i in 0..self.n {
            let row = self.row(i);
            for a in 0..self.p {
                let ra = row[a];
                if ra == 0.0 {
                    continue;
                }
                for b in 0..self.p {
                    g[a * self.p + b] += ra * row[b];
                }
            }
        }
        g
    }

    /// Largest eigenvalue of `X^T X` by deterministic power iteration.
    pub fn spectral_norm_sq(&self, iters: usize) -> f64 {
        let mut v = vec![1.0 / (self.p as f64).sqrt(); self.p];
        let mut lambda = 0.0;
        for _ in 0..iters {
            let xv = self.matvec(&v);
            let mut w = self.transpose_matvec(&xv);
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm <= f64::MIN_POSITIVE {
                return 0.0;
            }
            for x in &mut w {
                *x /= norm;
            }
            lambda = norm;
            v = w;
        }
        lambda
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(DesignMatrix::from_row_major(0, 2, vec![]).is_err());
        assert!(DesignMatrix::from_row_major(2, 2, vec![1.0; 3]).is_err());
        assert!(DesignMatrix::from_row_major(1, 2, vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn products_match_hand_values() {
        let x = DesignMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, -4.0]]).unwrap();
        assert_eq!(x.matvec(&[1.0, 1.0]), vec![3.0, -1.0]);
        assert_eq!(x.transpose_matvec(&[1.0, 1.0]), vec![4.0, -2.0]);
        assert_eq!(x.column_norm_sq(1), 20.0);
    }

    #[test]
    fn power_iteration_finds_top_eigenvalue() {
        // diag(3, 1) as a design: X^T X = diag(9, 1).
        let x = DesignMatrix::from_rows(&[vec![3.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let lambda = x.spectral_norm_sq(200);
        assert!((lambda - 9.0).abs() < 1e-9, "lambda {lambda}");
    }
}
