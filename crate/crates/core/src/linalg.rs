//! Row-major design matrices and small dense solves.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};

/// Dense row-major matrix; rows are observations, columns regressors.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(invalid("ragged matrix rows"));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(invalid(format!("{} values cannot fill a {rows}x{cols} matrix", data.len())));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn push_row(&mut self, row: &[f64]) -> Result<()> {
        if self.rows == 0 && self.cols == 0 {
            self.cols = row.len();
        }
        if row.len() != self.cols {
            return Err(invalid(format!("row of length {} in a {}-column matrix", row.len(), self.cols)));
        }
        self.data.extend_from_slice(row);
        self.rows += 1;
        Ok(())
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// Rows selected by index.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    /// Columns selected by index.
    pub fn select_cols(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.rows);
        for i in 0..self.rows {
            let r = self.row(i);
            data.extend(idx.iter().map(|&j| r[j]));
        }
        Self {
            rows: self.rows,
            cols: idx.len(),
            data,
        }
    }

    /// Gram matrix `XᵀX` (row-major, `cols × cols`).
    pub fn gram(&self) -> Vec<f64> {
        let p = self.cols;
        let mut g = vec![0.0; p * p];
        for i in 0..self.rows {
            let r = self.row(i);
            for a in 0..p {
                let ra = r[a];
                if ra == 0.0 {
                    continue;
                }
                let ga = &mut g[a * p..(a + 1) * p];
                for b in a..p {
                    ga[b] += ra * r[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                g[a * p + b] = g[b * p + a];
            }
        }
        g
    }

    /// `Xᵀv`.
    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            for (o, &x) in out.iter_mut().zip(self.row(i)) {
                *o += x * vi;
            }
        }
        out
    }

    pub fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves the square system `A x = b` by LU with partial pivoting.
pub fn solve_square(a: &[f64], n: usize, b: &[f64]) -> Result<Vec<f64>> {
    let m = DMatrix::from_row_slice(n, n, a);
    let lu = m.lu();
    lu.solve(&DVector::from_column_slice(b))
        .map(|x| x.iter().copied().collect())
        .ok_or_else(|| Error::Numerical("singular linear system".into()))
}

/// Inverse of a square row-major matrix.
pub fn invert(a: &[f64], n: usize) -> Result<Vec<f64>> {
    let m = DMatrix::from_row_slice(n, n, a);
    let inv = m
        .try_inverse()
        .ok_or_else(|| Error::Numerical("singular matrix".into()))?;
    // nalgebra is column-major; transpose into row-major order
    Ok(inv.transpose().as_slice().to_vec())
}
