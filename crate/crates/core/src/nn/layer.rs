//! Fully connected layer: `a = act(x W^T + b)`.
//!
//! Weights are stored row-major with one row per output unit, so a batch
//! forward pass is a single `matmul_transpose` against the input.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::activation::Activation;
use crate::rng::RngHandle;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DenseLayerRepr")]
pub struct DenseLayer {
    weights: Matrix,
    biases: Vec<f64>,
    activation: Activation,
}

#[derive(Deserialize)]
struct DenseLayerRepr {
    weights: Matrix,
    biases: Vec<f64>,
    activation: Activation,
}

impl TryFrom<DenseLayerRepr> for DenseLayer {
    type Error = Error;

    fn try_from(r: DenseLayerRepr) -> Result<DenseLayer> {
        DenseLayer::new(r.weights, r.biases, r.activation)
    }
}

impl DenseLayer {
    pub fn new(weights: Matrix, biases: Vec<f64>, activation: Activation) -> Result<DenseLayer> {
        if biases.len() != weights.rows() {
            return Err(Error::DimMismatch {
                op: "dense layer construction",
                left_rows: weights.rows(),
                left_cols: weights.cols(),
                right_rows: 1,
                right_cols: biases.len(),
            });
        }
        if !biases.iter().all(|b| b.is_finite()) {
            return Err(Error::NonFinite {
                op: "dense layer construction".into(),
            });
        }
        Ok(DenseLayer {
            weights,
            biases,
            activation,
        })
    }

    /// Uniform initialization in `±sqrt(6 / (fan_in + fan_out))`, widened by
    /// 4x for sigmoid layers whose useful input range is broader. `scale`
    /// shrinks the interval further (the adversarial heads use 0.1 so their
    /// outputs start near one half); pass 1.0 everywhere else. Biases start
    /// at zero. Weights are drawn row-major, so the draw sequence is fixed.
    pub fn init(
        in_dim: usize,
        out_dim: usize,
        activation: Activation,
        rng: &mut RngHandle,
        scale: f64,
    ) -> Result<DenseLayer> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::Config(format!(
                "dense layer dimensions must be nonzero, got {in_dim} -> {out_dim}"
            )));
        }
        let mut limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        if activation == Activation::Sigmoid {
            limit *= 4.0;
        }
        limit *= scale;
        let mut data = Vec::with_capacity(in_dim * out_dim);
        for _ in 0..in_dim * out_dim {
            data.push(rng.uniform(-limit, limit));
        }
        DenseLayer::new(
            Matrix::new(out_dim, in_dim, data)?,
            vec![0.0; out_dim],
            activation,
        )
    }

    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn weights_mut(&mut self) -> &mut Matrix {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut [f64] {
        &mut self.biases
    }

    /// `input W^T + b`, before the activation.
    pub fn pre_activation(&self, input: &Matrix) -> Result<Matrix> {
        let mut z = input.matmul_transpose(&self.weights).map_err(|e| match e {
            Error::DimMismatch { .. } => Error::DimMismatch {
                op: "dense forward",
                left_rows: input.rows(),
                left_cols: input.cols(),
                right_rows: self.out_dim(),
                right_cols: self.in_dim(),
            },
            other => other,
        })?;
        z.add_row_broadcast(&self.biases)?;
        Ok(z)
    }

    /// Batch forward pass on rows of `input`.
    pub fn forward(&self, input: &Matrix) -> Result<Matrix> {
        let out = self.activation.apply_matrix(&self.pre_activation(input)?);
        out.ensure_finite("dense forward")?;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_known_case() {
        // x = [2, 3], W = [[1, 1]], b = [1]: relu(2 + 3 + 1) = 6
        let layer = DenseLayer::new(
            Matrix::new(1, 2, vec![1.0, 1.0]).unwrap(),
            vec![1.0],
            Activation::Relu,
        )
        .unwrap();
        let out = layer
            .forward(&Matrix::new(1, 2, vec![2.0, 3.0]).unwrap())
            .unwrap();
        assert_eq!(out.data(), &[6.0]);
    }

    #[test]
    fn relu_layer_clamps_negative_units() {
        let layer = DenseLayer::new(
            Matrix::new(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap(),
            vec![0.0, 0.0],
            Activation::Relu,
        )
        .unwrap();
        let out = layer
            .forward(&Matrix::new(1, 2, vec![-5.0, 4.0]).unwrap())
            .unwrap();
        assert_eq!(out.data(), &[0.0, 4.0]);
    }

    #[test]
    fn zero_weight_sigmoid_layer_outputs_half() {
        let layer = DenseLayer::new(Matrix::zeros(3, 4), vec![0.0; 3], Activation::Sigmoid).unwrap();
        let out = layer
            .forward(&Matrix::new(2, 4, vec![1.0; 8]).unwrap())
            .unwrap();
        assert!(out.data().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn forward_shape_error_names_shapes() {
        let layer = DenseLayer::new(Matrix::zeros(3, 4), vec![0.0; 3], Activation::Relu).unwrap();
        let err = layer.forward(&Matrix::zeros(2, 5)).unwrap_err();
        assert!(err.to_string().contains("2x5"), "{err}");
    }

    #[test]
    fn bias_length_must_match_output_width() {
        assert!(DenseLayer::new(Matrix::zeros(3, 4), vec![0.0; 2], Activation::Relu).is_err());
    }

    #[test]
    fn init_respects_bounds_and_zero_biases() {
        let mut rng = RngHandle::new(11);
        let relu = DenseLayer::init(20, 30, Activation::Relu, &mut rng, 1.0).unwrap();
        let limit = (6.0 / 50.0f64).sqrt();
        assert!(relu.weights().data().iter().all(|w| w.abs() <= limit));
        assert!(relu.biases().iter().all(|&b| b == 0.0));

        let mut rng = RngHandle::new(11);
        let sig = DenseLayer::init(20, 30, Activation::Sigmoid, &mut rng, 1.0).unwrap();
        assert!(sig.weights().data().iter().all(|w| w.abs() <= 4.0 * limit));
        // the sigmoid interval is genuinely wider
        assert!(sig
            .weights()
            .data()
            .iter()
            .any(|w| w.abs() > limit));
    }

    #[test]
    fn init_is_deterministic_per_seed() {
        let a = DenseLayer::init(8, 4, Activation::Relu, &mut RngHandle::new(3), 1.0).unwrap();
        let b = DenseLayer::init(8, 4, Activation::Relu, &mut RngHandle::new(3), 1.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn serde_round_trip() {
        let layer =
            DenseLayer::init(5, 2, Activation::Sigmoid, &mut RngHandle::new(1), 1.0).unwrap();
        let json = serde_json::to_string(&layer).unwrap();
        let back: DenseLayer = serde_json::from_str(&json).unwrap();
        assert_eq!(layer, back);
    }
}
