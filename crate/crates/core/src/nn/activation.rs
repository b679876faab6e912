use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Identity,
}

impl Activation {
    pub fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Relu => v.max(0.0),
            Activation::Sigmoid => sigmoid(v),
            Activation::Identity => v,
        }
    }

    /// Derivative with respect to the pre-activation. The ReLU derivative at
    /// exactly zero is taken as 0.
    pub fn grad(self, pre: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => {
                let s = sigmoid(pre);
                s * (1.0 - s)
            }
            Activation::Identity => 1.0,
        }
    }

    pub fn apply_matrix(self, m: &Matrix) -> Matrix {
        m.map(|v| self.apply(v))
    }
}

/// Overflow-safe logistic function: both branches only ever exponentiate a
/// non-positive argument.
pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_known_values() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(3f64.ln()) - 0.75).abs() < 1e-15);
        assert!((sigmoid(2.0) + sigmoid(-2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sigmoid_saturates_without_overflow() {
        assert!(sigmoid(800.0).is_finite());
        assert!(sigmoid(-800.0).is_finite());
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
    }

    #[test]
    fn relu_clamps_negatives() {
        assert_eq!(Activation::Relu.apply(-3.0), 0.0);
        assert_eq!(Activation::Relu.apply(2.5), 2.5);
        assert_eq!(Activation::Relu.grad(-1.0), 0.0);
        assert_eq!(Activation::Relu.grad(0.0), 0.0);
        assert_eq!(Activation::Relu.grad(1.0), 1.0);
    }

    #[test]
    fn sigmoid_grad_peaks_at_zero() {
        assert!((Activation::Sigmoid.grad(0.0) - 0.25).abs() < 1e-15);
        assert!(Activation::Sigmoid.grad(5.0) < 0.25);
    }

    #[test]
    fn identity_passes_through() {
        assert_eq!(Activation::Identity.apply(-7.5), -7.5);
        assert_eq!(Activation::Identity.grad(123.0), 1.0);
    }
}
