//! Training losses. Both return the scalar loss together with its gradient
//! with respect to the prediction matrix, averaged over all entries, so the
//! backward pass needs no extra batch scaling.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Probabilities are clamped into `[EPS, 1 - EPS]` before the logs so a
/// saturated sigmoid cannot produce an infinite loss.
pub const BCE_EPSILON: f64 = 1e-7;

fn check_same_shape(op: &'static str, a: &Matrix, b: &Matrix) -> Result<()> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::DimMismatch {
            op,
            left_rows: a.rows(),
            left_cols: a.cols(),
            right_rows: b.rows(),
            right_cols: b.cols(),
        });
    }
    if a.rows() * a.cols() == 0 {
        return Err(Error::EmptyInput { what: op.into() });
    }
    Ok(())
}

/// Mean squared error `(1/N) * sum((p_i - t_i)^2)` over all `N` entries.
pub fn mse_loss(prediction: &Matrix, target: &Matrix) -> Result<(f64, Matrix)> {
    check_same_shape("mse_loss", prediction, target)?;
    let n = (prediction.rows() * prediction.cols()) as f64;
    let mut loss = 0.0;
    let mut grad = Matrix::zeros(prediction.rows(), prediction.cols());
    for (i, (&p, &t)) in prediction.data().iter().zip(target.data()).enumerate() {
        let d = p - t;
        loss += d * d;
        grad.data_mut()[i] = 2.0 * d / n;
    }
    loss /= n;
    if !loss.is_finite() {
        return Err(Error::NonFinite {
            op: "mse_loss".into(),
        });
    }
    Ok((loss, grad))
}

/// Binary cross-entropy `-(1/N) * sum(y ln p + (1-y) ln(1-p))`.
///
/// Targets must be exactly 0 or 1. The gradient is evaluated at the clamped
/// probability, `(p - y) / (p (1 - p)) / N`, so it stays finite even when
/// the prediction saturates.
pub fn bce_loss(prediction: &Matrix, target: &Matrix) -> Result<(f64, Matrix)> {
    check_same_shape("bce_loss", prediction, target)?;
    let n = (prediction.rows() * prediction.cols()) as f64;
    let mut loss = 0.0;
    let mut grad = Matrix::zeros(prediction.rows(), prediction.cols());
    for (i, (&p, &y)) in prediction.data().iter().zip(target.data()).enumerate() {
        if y != 0.0 && y != 1.0 {
            return Err(Error::InvalidLabel {
                value: format!("{y}"),
                message: "binary cross-entropy targets must be exactly 0 or 1".into(),
            });
        }
        let pc = p.clamp(BCE_EPSILON, 1.0 - BCE_EPSILON);
        loss -= y * pc.ln() + (1.0 - y) * (1.0 - pc).ln();
        grad.data_mut()[i] = (pc - y) / (pc * (1.0 - pc)) / n;
    }
    loss /= n;
    if !loss.is_finite() {
        return Err(Error::NonFinite {
            op: "bce_loss".into(),
        });
    }
    Ok((loss, grad))
}
