//! Adam optimizer with bias-corrected first and second moments:
//!
//! ```text
//! m <- b1 m + (1 - b1) g        mhat = m / (1 - b1^t)
//! v <- b2 v + (1 - b2) g^2      vhat = v / (1 - b2^t)
//! p <- p - lr * mhat / (sqrt(vhat) + eps)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::backprop::LayerGrad;
use crate::nn::layer::DenseLayer;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> AdamConfig {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> AdamConfig {
        AdamConfig {
            learning_rate,
            ..AdamConfig::default()
        }
    }

    // Negated comparisons on purpose: a NaN hyperparameter must fail.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "adam learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::Config(format!(
                    "adam {name} must lie in [0, 1), got {b}"
                )));
            }
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config(format!(
                "adam epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// Moment buffers for one flat parameter slice.
#[derive(Clone, Debug)]
pub struct AdamState {
    config: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl AdamState {
    pub fn new(param_count: usize, config: AdamConfig) -> Result<AdamState> {
        config.validate()?;
        Ok(AdamState {
            config,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
            step: 0,
        })
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update over a flat parameter slice.
    pub fn apply(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::DimMismatch {
                op: "adam_step",
                left_rows: 1,
                left_cols: self.m.len(),
                right_rows: 1,
                right_cols: if params.len() != self.m.len() {
                    params.len()
                } else {
                    grads.len()
                },
            });
        }
        self.step += 1;
        let t = self.step as i32;
        let c = &self.config;
        let m_corr = 1.0 - c.beta1.powi(t);
        let v_corr = 1.0 - c.beta2.powi(t);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = c.beta1 * self.m[i] + (1.0 - c.beta1) * g;
            self.v[i] = c.beta2 * self.v[i] + (1.0 - c.beta2) * g * g;
            let m_hat = self.m[i] / m_corr;
            let v_hat = self.v[i] / v_corr;
            params[i] -= c.learning_rate * m_hat / (v_hat.sqrt() + c.epsilon);
            if !params[i].is_finite() {
                return Err(Error::NonFinite {
                    op: "adam_step".into(),
                });
            }
        }
        Ok(())
    }
}

/// Paired Adam states for every weight matrix and bias vector of a network.
pub struct NetAdam {
    weights: Vec<AdamState>,
    biases: Vec<AdamState>,
}

impl NetAdam {
    pub fn new(layers: &[DenseLayer], config: AdamConfig) -> Result<NetAdam> {
        let mut weights = Vec::with_capacity(layers.len());
        let mut biases = Vec::with_capacity(layers.len());
        for layer in layers {
            weights.push(AdamState::new(layer.weights().data().len(), config)?);
            biases.push(AdamState::new(layer.biases().len(), config)?);
        }
        Ok(NetAdam { weights, biases })
    }

    pub fn step(&mut self, layers: &mut [DenseLayer], grads: &[LayerGrad]) -> Result<()> {
        if grads.len() != layers.len() || layers.len() != self.weights.len() {
            return Err(Error::Config(format!(
                "optimizer step: {} layers, {} gradients, {} states",
                layers.len(),
                grads.len(),
                self.weights.len()
            )));
        }
        for (i, (layer, grad)) in layers.iter_mut().zip(grads).enumerate() {
            self.weights[i].apply(layer.weights_mut().data_mut(), grad.d_weights.data())?;
            self.biases[i].apply(layer.biases_mut(), grad.d_biases.as_slice())?;
        }
        Ok(())
    }
}
