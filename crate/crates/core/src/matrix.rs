//! Dense row-major matrix of `f64` used by every numeric stage.
//!
//! Invariants: `data.len() == rows * cols` and every value is finite. All
//! reductions (dot products, column sums) accumulate in a fixed ascending
//! index order, so results are bit-identical whether or not the `parallel`
//! feature distributes independent output rows across threads.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Minimum number of multiply-adds before a product is worth spreading
/// across threads. Purely a scheduling knob, never changes results.
const PAR_WORK_THRESHOLD: usize = 1 << 15;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl TryFrom<MatrixRepr> for Matrix {
    type Error = Error;

    fn try_from(r: MatrixRepr) -> Result<Matrix> {
        Matrix::new(r.rows, r.cols, r.data)
    }
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Matrix> {
        if data.len() != rows * cols {
            return Err(Error::Config(format!(
                "matrix data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        let m = Matrix { rows, cols, data };
        m.ensure_finite("matrix construction")?;
        Ok(m)
    }

    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Matrix {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Raw mutable access for in-place parameter updates. Callers are
    /// responsible for keeping values finite; the optimizer re-checks.
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    pub fn ensure_finite(&self, op: &'static str) -> Result<()> {
        if self.data.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite { op: op.into() })
        }
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    /// Element-wise sum; shapes must match.
    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimMismatch {
                op: "add",
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: other.rows,
                right_cols: other.cols,
            });
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Rows of `self` restricted to `indices`, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Matrix> {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            if i >= self.rows {
                return Err(Error::Config(format!(
                    "row index {i} out of bounds for {} rows",
                    self.rows
                )));
            }
            data.extend_from_slice(self.row(i));
        }
        Ok(Matrix {
            rows: indices.len(),
            cols: self.cols,
            data,
        })
    }

    /// Columns of `self` restricted to `indices`, in the given order.
    pub fn select_cols(&self, indices: &[usize]) -> Result<Matrix> {
        for &c in indices {
            if c >= self.cols {
                return Err(Error::Config(format!(
                    "column index {c} out of bounds for {} columns",
                    self.cols
                )));
            }
        }
        Ok(Matrix::from_fn(self.rows, indices.len(), |r, j| {
            self.get(r, indices[j])
        }))
    }

    /// Horizontal concatenation; all blocks must have the same row count.
    pub fn hstack(blocks: &[&Matrix]) -> Result<Matrix> {
        if blocks.is_empty() {
            return Err(Error::EmptyInput {
                what: "hstack block list".into(),
            });
        }
        let rows = blocks[0].rows;
        for b in blocks {
            if b.rows != rows {
                return Err(Error::DimMismatch {
                    op: "hstack",
                    left_rows: rows,
                    left_cols: blocks[0].cols,
                    right_rows: b.rows,
                    right_cols: b.cols,
                });
            }
        }
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for b in blocks {
                data.extend_from_slice(b.row(r));
            }
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Stacks `self` on top of `other`; column counts must match.
    pub fn vstack(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.cols {
            return Err(Error::DimMismatch {
                op: "vstack",
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: other.rows,
                right_cols: other.cols,
            });
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Matrix {
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        })
    }

    /// `self * other`, with shapes `[m x k] * [k x n] -> [m x n]`.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimMismatch {
                op: "matmul",
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: other.rows,
                right_cols: other.cols,
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        let work = self.rows * self.cols * other.cols;
        for_each_out_row(&mut out.data, other.cols, work, |i, out_row| {
            matmul_row(self.row(i), other, out_row)
        });
        out.ensure_finite("matmul")?;
        Ok(out)
    }

    /// `self * other^T`, with shapes `[m x k] * [n x k]^T -> [m x n]`.
    ///
    /// This is the layout used by layer forward passes, where weights are
    /// stored one output unit per row.
    pub fn matmul_transpose(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.cols {
            return Err(Error::DimMismatch {
                op: "matmul_transpose",
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: other.rows,
                right_cols: other.cols,
            });
        }
        let mut out = Matrix::zeros(self.rows, other.rows);
        let work = self.rows * self.cols * other.rows;
        for_each_out_row(&mut out.data, other.rows, work, |i, out_row| {
            matmul_transpose_row(self.row(i), other, out_row)
        });
        out.ensure_finite("matmul_transpose")?;
        Ok(out)
    }

    /// `self^T * other`, with shapes `[k x m]^T * [k x n] -> [m x n]`.
    pub fn transpose_matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows {
            return Err(Error::DimMismatch {
                op: "transpose_matmul",
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: other.rows,
                right_cols: other.cols,
            });
        }
        self.transpose().matmul(other)
    }

    /// Adds `bias[c]` to every entry of column `c`.
    pub fn add_row_broadcast(&mut self, bias: &[f64]) -> Result<()> {
        if bias.len() != self.cols {
            return Err(Error::DimMismatch {
                op: "add_row_broadcast",
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: 1,
                right_cols: bias.len(),
            });
        }
        for r in 0..self.rows {
            let row = self.row_mut(r);
            for (v, b) in row.iter_mut().zip(bias) {
                *v += b;
            }
        }
        Ok(())
    }

    /// Column sums accumulated top to bottom.
    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for r in 0..self.rows {
            for (s, v) in sums.iter_mut().zip(self.row(r)) {
                *s += v;
            }
        }
        sums
    }

    #[doc(hidden)]
    pub fn matmul_seq(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimMismatch {
                op: "matmul",
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: other.rows,
                right_cols: other.cols,
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            matmul_row(self.row(i), other, out.row_mut(i));
        }
        out.ensure_finite("matmul")?;
        Ok(out)
    }

    #[doc(hidden)]
    pub fn matmul_transpose_seq(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.cols {
            return Err(Error::DimMismatch {
                op: "matmul_transpose",
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: other.rows,
                right_cols: other.cols,
            });
        }
        let mut out = Matrix::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            matmul_transpose_row(self.row(i), other, out.row_mut(i));
        }
        out.ensure_finite("matmul_transpose")?;
        Ok(out)
    }
}

/// One output row of `a_row * b`: ascending-k accumulation into `out_row`.
fn matmul_row(a_row: &[f64], b: &Matrix, out_row: &mut [f64]) {
    out_row.fill(0.0);
    for (k, &aik) in a_row.iter().enumerate() {
        let b_row = b.row(k);
        for (o, &bkj) in out_row.iter_mut().zip(b_row) {
            *o += aik * bkj;
        }
    }
}

/// One output row of `a_row * b^T`: plain dot products, ascending k.
fn matmul_transpose_row(a_row: &[f64], b: &Matrix, out_row: &mut [f64]) {
    for (j, o) in out_row.iter_mut().enumerate() {
        let b_row = b.row(j);
        let mut acc = 0.0;
        for (x, y) in a_row.iter().zip(b_row) {
            acc += x * y;
        }
        *o = acc;
    }
}

/// Runs `f(i, out_row)` for every output row. Rows are independent, so with
/// the `parallel` feature they may run on any thread; each row's arithmetic
/// is sequential either way.
#[cfg(feature = "parallel")]
fn for_each_out_row(
    data: &mut [f64],
    cols: usize,
    work: usize,
    f: impl Fn(usize, &mut [f64]) + Sync,
) {
    if work >= PAR_WORK_THRESHOLD && data.len() > cols {
        data.par_chunks_mut(cols)
            .enumerate()
            .for_each(|(i, row)| f(i, row));
    } else {
        for (i, row) in data.chunks_mut(cols).enumerate() {
            f(i, row);
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn for_each_out_row(
    data: &mut [f64],
    cols: usize,
    _work: usize,
    f: impl Fn(usize, &mut [f64]) + Sync,
) {
    for (i, row) in data.chunks_mut(cols).enumerate() {
        f(i, row);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: usize, cols: usize, v: &[f64]) -> Matrix {
        Matrix::new(rows, cols, v.to_vec()).unwrap()
    }

    #[test]
    fn construction_checks_length() {
        assert!(Matrix::new(2, 2, vec![1.0; 3]).is_err());
        assert!(Matrix::new(2, 2, vec![1.0; 4]).is_ok());
    }

    #[test]
    fn construction_rejects_non_finite() {
        let err = Matrix::new(1, 2, vec![1.0, f64::NAN]).unwrap_err();
        assert_eq!(err.exit_code(), 4);
    }

    #[test]
    fn matmul_known_product() {
        let a = m(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let b = m(2, 2, &[5.0, 6.0, 7.0, 8.0]);
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.data(), &[19.0, 22.0, 43.0, 50.0]);
    }

    #[test]
    fn matmul_transpose_matches_explicit_transpose() {
        let a = m(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let w = m(4, 3, &(0..12).map(|i| i as f64 * 0.25 - 1.0).collect::<Vec<_>>());
        let fast = a.matmul_transpose(&w).unwrap();
        let slow = a.matmul(&w.transpose()).unwrap();
        assert_eq!(fast.data(), slow.data());
    }

    #[test]
    fn dim_mismatch_names_both_shapes() {
        let a = m(2, 3, &[0.0; 6]);
        let b = m(2, 2, &[0.0; 4]);
        let err = a.matmul(&b).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("2x3") && msg.contains("2x2"), "{msg}");
    }

    #[test]
    fn parallel_and_sequential_products_are_bit_identical() {
        let a = Matrix::from_fn(37, 53, |r, c| ((r * 53 + c) as f64).sin());
        let b = Matrix::from_fn(41, 53, |r, c| ((r * 53 + c) as f64).cos());
        let par = a.matmul_transpose(&b).unwrap();
        let seq = a.matmul_transpose_seq(&b).unwrap();
        assert!(par
            .data()
            .iter()
            .zip(seq.data())
            .all(|(x, y)| x.to_bits() == y.to_bits()));

        let c = Matrix::from_fn(37, 29, |r, c| ((r + 2 * c) as f64).tanh());
        let par = a.transpose().matmul(&c).unwrap();
        let seq = a.transpose().matmul_seq(&c).unwrap();
        assert!(par
            .data()
            .iter()
            .zip(seq.data())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn transpose_is_an_involution() {
        let a = m(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(a.transpose().transpose(), a);
    }

    #[test]
    fn hstack_concatenates_columns_in_order() {
        let a = m(2, 1, &[1.0, 3.0]);
        let b = m(2, 2, &[4.0, 5.0, 6.0, 7.0]);
        let s = Matrix::hstack(&[&a, &b]).unwrap();
        assert_eq!(s.row(0), &[1.0, 4.0, 5.0]);
        assert_eq!(s.row(1), &[3.0, 6.0, 7.0]);
        assert!(Matrix::hstack(&[&a, &m(1, 1, &[0.0])]).is_err());
    }

    #[test]
    fn select_rows_and_cols() {
        let a = m(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let r = a.select_rows(&[2, 0]).unwrap();
        assert_eq!(r.data(), &[5.0, 6.0, 1.0, 2.0]);
        let c = a.select_cols(&[1]).unwrap();
        assert_eq!(c.data(), &[2.0, 4.0, 6.0]);
        assert!(a.select_rows(&[3]).is_err());
    }

    #[test]
    fn serde_round_trip_preserves_bits_and_rejects_bad_length() {
        let a = Matrix::from_fn(3, 4, |r, c| (r as f64 + 0.1) / (c as f64 + 0.7));
        let json = serde_json::to_string(&a).unwrap();
        let back: Matrix = serde_json::from_str(&json).unwrap();
        assert!(a
            .data()
            .iter()
            .zip(back.data())
            .all(|(x, y)| x.to_bits() == y.to_bits()));

        let bad = r#"{"rows":2,"cols":2,"data":[1.0,2.0,3.0]}"#;
        assert!(serde_json::from_str::<Matrix>(bad).is_err());
    }
}
