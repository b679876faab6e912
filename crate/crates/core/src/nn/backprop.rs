//! Reverse-mode gradients through a stack of dense layers.
//!
//! The forward pass records every pre-activation and activation; backprop
//! walks the layers in reverse and also returns the gradient with respect to
//! the network input, which the adversarial generator needs to receive
//! gradients through a frozen discriminator.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::layer::DenseLayer;

pub struct ForwardCache {
    input: Matrix,
    pre_activations: Vec<Matrix>,
    activations: Vec<Matrix>,
}

impl ForwardCache {
    pub fn output(&self) -> &Matrix {
        self.activations.last().unwrap_or(&self.input)
    }
}

#[derive(Clone, Debug)]
pub struct LayerGrad {
    pub d_weights: Matrix,
    pub d_biases: Vec<f64>,
}

pub struct Gradients {
    pub layers: Vec<LayerGrad>,
    /// dLoss/dInput, shaped like the forward input batch.
    pub input: Matrix,
}

/// Plain forward pass without caching.
pub fn forward(layers: &[DenseLayer], input: &Matrix) -> Result<Matrix> {
    let mut x = input.clone();
    for layer in layers {
        x = layer.forward(&x)?;
    }
    Ok(x)
}

pub fn forward_cached(layers: &[DenseLayer], input: &Matrix) -> Result<ForwardCache> {
    let mut pre_activations = Vec::with_capacity(layers.len());
    let mut activations = Vec::with_capacity(layers.len());
    let mut x = input.clone();
    for layer in layers {
        let pre = layer.pre_activation(&x)?;
        let act = layer.activation().apply_matrix(&pre);
        act.ensure_finite("dense forward")?;
        pre_activations.push(pre);
        x = act.clone();
        activations.push(act);
    }
    Ok(ForwardCache {
        input: input.clone(),
        pre_activations,
        activations,
    })
}

/// Backpropagates `output_grad` (dLoss/dOutput) through `layers`.
///
/// The cache must come from a `forward_cached` call on the same network and
/// batch; a mismatched cache is rejected rather than silently misused.
pub fn backprop(
    layers: &[DenseLayer],
    cache: &ForwardCache,
    output_grad: &Matrix,
) -> Result<Gradients> {
    if cache.activations.len() != layers.len() {
        return Err(Error::Config(format!(
            "backprop: forward cache covers {} layers, network has {}",
            cache.activations.len(),
            layers.len()
        )));
    }
    for (layer, pre) in layers.iter().zip(&cache.pre_activations) {
        if pre.cols() != layer.out_dim() {
            return Err(Error::Config(
                "backprop: forward cache does not match network shapes".into(),
            ));
        }
    }
    let out = cache.output();
    if output_grad.rows() != out.rows() || output_grad.cols() != out.cols() {
        return Err(Error::DimMismatch {
            op: "backprop output gradient",
            left_rows: out.rows(),
            left_cols: out.cols(),
            right_rows: output_grad.rows(),
            right_cols: output_grad.cols(),
        });
    }

    let mut layer_grads: Vec<LayerGrad> = Vec::with_capacity(layers.len());
    let mut upstream = output_grad.clone();
    for (idx, layer) in layers.iter().enumerate().rev() {
        let pre = &cache.pre_activations[idx];
        // delta = dLoss/dPre = upstream (.) act'(pre)
        let mut delta = Matrix::zeros(pre.rows(), pre.cols());
        for (i, (&u, &z)) in upstream.data().iter().zip(pre.data()).enumerate() {
            delta.data_mut()[i] = u * layer.activation().grad(z);
        }
        let below = if idx == 0 {
            &cache.input
        } else {
            &cache.activations[idx - 1]
        };
        let d_weights = delta.transpose_matmul(below)?;
        let d_biases = delta.column_sums();
        upstream = delta.matmul(layer.weights())?;
        layer_grads.push(LayerGrad {
            d_weights,
            d_biases,
        });
    }
    layer_grads.reverse();
    Ok(Gradients {
        layers: layer_grads,
        input: upstream,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use crate::nn::activation::Activation;
    use crate::nn::loss::{bce_loss, mse_loss};
    use crate::rng::RngHandle;

    fn m(rows: usize, cols: usize, v: &[f64]) -> Matrix {
        Matrix::new(rows, cols, v.to_vec()).unwrap()
    }

    #[test]
    fn identity_layer_matches_linear_regression_gradient() {
        // y = x W^T + b with MSE loss: dL/dW = (2/N) (y - t)^T x.
        let layer = DenseLayer::new(m(1, 2, &[0.5, -0.3]), vec![0.1], Activation::Identity).unwrap();
        let x = m(3, 2, &[1.0, 2.0, -1.0, 0.5, 2.0, -2.0]);
        let t = m(3, 1, &[1.0, 0.0, -1.0]);
        let layers = [layer];
        let cache = forward_cached(&layers, &x).unwrap();
        let (_, lgrad) = mse_loss(cache.output(), &t).unwrap();
        let grads = backprop(&layers, &cache, &lgrad).unwrap();

        let resid = cache.output();
        let n = 3.0;
        for j in 0..2 {
            let mut expect = 0.0;
            for i in 0..3 {
                expect += 2.0 / n * (resid.get(i, 0) - t.get(i, 0)) * x.get(i, j);
            }
            let got = grads.layers[0].d_weights.get(0, j);
            assert!((got - expect).abs() < 1e-12, "col {j}: {got} vs {expect}");
        }
        let expect_b: f64 = (0..3)
            .map(|i| 2.0 / n * (resid.get(i, 0) - t.get(i, 0)))
            .sum();
        assert!((grads.layers[0].d_biases[0] - expect_b).abs() < 1e-12);
    }

    #[test]
    fn zero_output_grad_gives_zero_parameter_grads() {
        let mut rng = RngHandle::new(5);
        let layers = [
            DenseLayer::init(4, 3, Activation::Relu, &mut rng, 1.0).unwrap(),
            DenseLayer::init(3, 2, Activation::Sigmoid, &mut rng, 1.0).unwrap(),
        ];
        let x = rng.standard_normal_matrix(5, 4);
        let cache = forward_cached(&layers, &x).unwrap();
        let grads = backprop(&layers, &cache, &Matrix::zeros(5, 2)).unwrap();
        for g in &grads.layers {
            assert!(g.d_weights.data().iter().all(|&v| v == 0.0));
            assert!(g.d_biases.iter().all(|&v| v == 0.0));
        }
        assert!(grads.input.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mismatched_cache_is_rejected() {
        let mut rng = RngHandle::new(5);
        let one = [DenseLayer::init(4, 3, Activation::Relu, &mut rng, 1.0).unwrap()];
        let two = [
            one[0].clone(),
            DenseLayer::init(3, 2, Activation::Sigmoid, &mut rng, 1.0).unwrap(),
        ];
        let x = rng.standard_normal_matrix(2, 4);
        let cache = forward_cached(&one, &x).unwrap();
        assert!(backprop(&two, &cache, &Matrix::zeros(2, 2)).is_err());
    }

    /// Full finite-difference sweep over both layers of a relu + sigmoid
    /// stack under BCE. The broad randomized suite lives in the acceptance
    /// tests; this is the fast smoke version.
    #[test]
    fn two_layer_gradients_match_central_differences() {
        let mut rng = RngHandle::new(17);
        let mut layers = vec![
            DenseLayer::init(3, 4, Activation::Relu, &mut rng, 1.0).unwrap(),
            DenseLayer::init(4, 1, Activation::Sigmoid, &mut rng, 1.0).unwrap(),
        ];
        let x = rng.standard_normal_matrix(6, 3);
        let t = m(6, 1, &[1.0, 0.0, 1.0, 1.0, 0.0, 0.0]);

        let cache = forward_cached(&layers, &x).unwrap();
        let (_, lgrad) = bce_loss(cache.output(), &t).unwrap();
        let grads = backprop(&layers, &cache, &lgrad).unwrap();

        let h = 1e-5;
        let loss_at = |layers: &[DenseLayer]| -> f64 {
            let out = forward(layers, &x).unwrap();
            bce_loss(&out, &t).unwrap().0
        };
        for li in 0..2 {
            let wcount = layers[li].weights().data().len();
            for wi in 0..wcount {
                let orig = layers[li].weights().data()[wi];
                layers[li].weights_mut().data_mut()[wi] = orig + h;
                let up = loss_at(&layers);
                layers[li].weights_mut().data_mut()[wi] = orig - h;
                let down = loss_at(&layers);
                layers[li].weights_mut().data_mut()[wi] = orig;
                let fd = (up - down) / (2.0 * h);
                let a = grads.layers[li].d_weights.data()[wi];
                let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-6);
                assert!(rel < 1e-4, "layer {li} weight {wi}: {a} vs {fd}");
            }
        }
    }
}
