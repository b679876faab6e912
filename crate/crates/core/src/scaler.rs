//! Column-wise min-max scaling to the unit interval.
//!
//! Sigmoid-output networks reconstruct values in (0, 1), so their inputs are
//! mapped there first. The scaler is fitted on training rows only; rows seen
//! later are clipped into [0, 1] rather than allowed to leak outside the
//! fitted range.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MinMaxScaler {
    mins: Vec<f64>,
    maxs: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(matrix: &Matrix) -> Result<MinMaxScaler> {
        if matrix.is_empty() {
            return Err(Error::EmptyInput {
                what: "min-max scaler input".into(),
            });
        }
        let mut mins = vec![f64::INFINITY; matrix.cols()];
        let mut maxs = vec![f64::NEG_INFINITY; matrix.cols()];
        for r in 0..matrix.rows() {
            for c in 0..matrix.cols() {
                let v = matrix.get(r, c);
                mins[c] = mins[c].min(v);
                maxs[c] = maxs[c].max(v);
            }
        }
        Ok(MinMaxScaler { mins, maxs })
    }

    pub fn n_features(&self) -> usize {
        self.mins.len()
    }

    fn check_cols(&self, matrix: &Matrix, op: &'static str) -> Result<()> {
        if matrix.cols() != self.mins.len() {
            return Err(Error::DimMismatch {
                op,
                left_rows: matrix.rows(),
                left_cols: matrix.cols(),
                right_rows: 1,
                right_cols: self.mins.len(),
            });
        }
        Ok(())
    }

    /// Maps each column into [0, 1]. Columns that were constant during
    /// fitting map to 0.5, and values outside the fitted range clip to the
    /// interval edges.
    pub fn transform(&self, matrix: &Matrix) -> Result<Matrix> {
        self.check_cols(matrix, "min-max transform")?;
        Ok(Matrix::from_fn(matrix.rows(), matrix.cols(), |r, c| {
            let span = self.maxs[c] - self.mins[c];
            if span == 0.0 {
                0.5
            } else {
                ((matrix.get(r, c) - self.mins[c]) / span).clamp(0.0, 1.0)
            }
        }))
    }

    /// Maps unit-interval values back to the fitted range. Constant columns
    /// return their fitted value.
    pub fn inverse(&self, matrix: &Matrix) -> Result<Matrix> {
        self.check_cols(matrix, "min-max inverse")?;
        Ok(Matrix::from_fn(matrix.rows(), matrix.cols(), |r, c| {
            self.mins[c] + matrix.get(r, c) * (self.maxs[c] - self.mins[c])
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maps_fitted_range_onto_unit_interval() {
        let m = Matrix::new(3, 2, vec![2.0, 10.0, 4.0, 20.0, 6.0, 30.0]).unwrap();
        let scaler = MinMaxScaler::fit(&m).unwrap();
        let t = scaler.transform(&m).unwrap();
        assert_eq!(t.data(), &[0.0, 0.0, 0.5, 0.5, 1.0, 1.0]);
    }

    #[test]
    fn constant_columns_map_to_one_half() {
        let m = Matrix::new(2, 2, vec![7.0, 1.0, 7.0, 3.0]).unwrap();
        let scaler = MinMaxScaler::fit(&m).unwrap();
        let t = scaler.transform(&m).unwrap();
        assert_eq!(t.get(0, 0), 0.5);
        assert_eq!(t.get(1, 0), 0.5);
    }

    #[test]
    fn out_of_range_rows_clip_to_the_interval() {
        let train = Matrix::new(2, 1, vec![0.0, 10.0]).unwrap();
        let scaler = MinMaxScaler::fit(&train).unwrap();
        let test = Matrix::new(3, 1, vec![-5.0, 5.0, 25.0]).unwrap();
        let t = scaler.transform(&test).unwrap();
        assert_eq!(t.data(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn inverse_round_trips_in_range_values() {
        let m = Matrix::new(4, 3, vec![
            1.0, -2.0, 0.3, 4.0, 8.0, 0.9, 2.5, 3.0, 0.4, 0.5, -1.0, 0.6,
        ])
        .unwrap();
        let scaler = MinMaxScaler::fit(&m).unwrap();
        let back = scaler.inverse(&scaler.transform(&m).unwrap()).unwrap();
        for (a, b) in m.data().iter().zip(back.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn column_count_mismatch_is_an_error() {
        let m = Matrix::new(2, 2, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let scaler = MinMaxScaler::fit(&m).unwrap();
        let narrow = Matrix::new(2, 1, vec![0.0, 1.0]).unwrap();
        assert!(scaler.transform(&narrow).is_err());
        assert!(scaler.inverse(&narrow).is_err());
    }

    #[test]
    fn serde_round_trip_is_exact() {
        let m = Matrix::new(2, 2, vec![0.1, -3.7, 2.9, 11.25]).unwrap();
        let scaler = MinMaxScaler::fit(&m).unwrap();
        let json = serde_json::to_string(&scaler).unwrap();
        let again: MinMaxScaler = serde_json::from_str(&json).unwrap();
        let t1 = scaler.transform(&m).unwrap();
        let t2 = again.transform(&m).unwrap();
        assert_eq!(t1.data(), t2.data());
    }
}
