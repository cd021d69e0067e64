//! Dense row-major matrices with the two norms the bound formulas consume.
//!
//! Everything is double precision and deliberately unsophisticated: the
//! toolkit operates at desk scale (widths of at most a few hundred), where
//! dense storage and direct loops are the right tool.

use crate::error::{Error, Result};

/// Default relative tolerance for [`Matrix::spectral_norm`].
pub const SPECTRAL_TOL: f64 = 1e-9;

/// Dense row-major matrix. Immutable after construction in all public APIs.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Build from a flat row-major buffer.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension {
                context: "matrix buffer",
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Build from explicit rows; all rows must share one length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::Dimension {
                    context: "matrix row",
                    expected: c,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix { rows: r, cols: c, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Flat row-major view of the entries.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Matrix-vector product `M x`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::Dimension {
                context: "matvec input",
                expected: self.cols,
                got: x.len(),
            });
        }
        let mut out = vec![0.0; self.rows];
        for (r, o) in out.iter_mut().enumerate() {
            let row = self.row(r);
            let mut acc = 0.0;
            for (w, xi) in row.iter().zip(x) {
                acc += w * xi;
            }
            *o = acc;
        }
        Ok(out)
    }

    /// `Mᵀ x`.
    fn transpose_matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (r, xi) in x.iter().enumerate() {
            let row = self.row(r);
            for (o, w) in out.iter_mut().zip(row) {
                *o += w * xi;
            }
        }
        out
    }

    /// Entrywise max-norm `max |m_ij|`.
    pub fn max_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &v| m.max(v.abs()))
    }

    /// Entrywise absolute value.
    pub fn abs(&self) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v.abs()).collect(),
        }
    }

    /// Entrywise maximum of two matrices of equal shape.
    pub fn entrywise_max(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension {
                context: "entrywise_max",
                expected: self.rows * self.cols,
                got: other.rows * other.cols,
            });
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.max(*b))
            .collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// Largest singular value, by power iteration on `MᵀM`.
    ///
    /// Deterministic: starts from the normalized all-ones vector (falling back
    /// to basis vectors if that start is annihilated by `M`) and stops once
    /// the estimate is stable to relative `tol` or after `10 (rows + cols)`
    /// iterations. Returns 0 for the zero matrix.
    pub fn spectral_norm(&self, tol: f64) -> f64 {
        let (n, m) = (self.rows, self.cols);
        if n == 0 || m == 0 || self.data.iter().all(|&v| v == 0.0) {
            return 0.0;
        }

        // Deterministic start: all-ones, unless M annihilates it.
        let ones = vec![1.0 / (m as f64).sqrt(); m];
        let mut v = if norm2(&self.matvec(&ones).expect("shape checked")) > 0.0 {
            ones
        } else {
            let mut basis = None;
            for j in 0..m {
                let mut e = vec![0.0; m];
                e[j] = 1.0;
                if norm2(&self.matvec(&e).expect("shape checked")) > 0.0 {
                    basis = Some(e);
                    break;
                }
            }
            // Every basis vector annihilated would mean M = 0, handled above.
            basis.expect("nonzero matrix has a nonzero column")
        };

        let cap = 10 * (n + m);
        let mut sigma = 0.0;
        for _ in 0..cap {
            let w = self.matvec(&v).expect("shape checked");
            let new_sigma = norm2(&w);
            if new_sigma == 0.0 {
                return 0.0;
            }
            let u = self.transpose_matvec(&w);
            let un = norm2(&u);
            // ‖MᵀMv‖ = 0 with ‖Mv‖ > 0 is impossible, but guard anyway.
            if un == 0.0 {
                return new_sigma;
            }
            for (vi, ui) in v.iter_mut().zip(&u) {
                *vi = ui / un;
            }
            let done = (new_sigma - sigma).abs() <= tol * new_sigma;
            sigma = new_sigma;
            if done {
                break;
            }
        }
        sigma
    }
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Euclidean norm of the difference of two equal-length vectors.
pub fn l2_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
