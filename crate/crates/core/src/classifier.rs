//! Dense binary classifier over the fused (and oversampled) latent space.
//!
//! Two layers: 128 ReLU units into a single sigmoid unit, trained with
//! minibatch Adam on binary cross-entropy. A fraction of the training rows
//! (the last 20% after one shuffle, by default) is held out for a per-epoch
//! validation loss; those rows never receive gradient updates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::{backprop, bce_loss, forward_cached, Activation, AdamConfig, DenseLayer, NetAdam};
use crate::rng::RngHandle;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Fraction of training rows reserved for validation loss tracking.
    pub validation_split: f64,
    pub hidden_dim: usize,
    pub learning_rate: f64,
    /// Probability at or above which a row is called positive.
    pub threshold: f64,
}

impl Default for ClassifierConfig {
    fn default() -> ClassifierConfig {
        ClassifierConfig {
            epochs: 10,
            batch_size: 32,
            validation_split: 0.2,
            hidden_dim: 128,
            learning_rate: 1e-3,
            threshold: 0.5,
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.hidden_dim == 0 {
            return Err(Error::Config(
                "epochs, batch_size and hidden_dim must all be at least 1".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.validation_split) {
            return Err(Error::Config(format!(
                "validation_split must lie in [0, 1), got {}",
                self.validation_split
            )));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::Config(format!(
                "threshold must lie in [0, 1], got {}",
                self.threshold
            )));
        }
        AdamConfig::with_learning_rate(self.learning_rate).validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub train: f64,
    /// Absent when `validation_split` rounds to zero rows.
    pub validation: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassifierModel {
    layers: Vec<DenseLayer>,
    pub threshold: f64,
    pub loss_trace: Vec<EpochLoss>,
}

fn label_column(labels: &[u8]) -> Result<Matrix> {
    let mut data = Vec::with_capacity(labels.len());
    for &l in labels {
        match l {
            0 | 1 => data.push(f64::from(l)),
            other => {
                return Err(Error::InvalidLabel {
                    value: other.to_string(),
                    message: "labels must be 0 or 1".into(),
                })
            }
        }
    }
    Matrix::new(labels.len(), 1, data)
}

/// Trains the two-layer classifier. The row shuffle that defines the
/// validation holdout is drawn once up front, so the split is a pure
/// function of the seed.
pub fn train_classifier(
    latent: &Matrix,
    labels: &[u8],
    config: &ClassifierConfig,
    rng: &mut RngHandle,
) -> Result<ClassifierModel> {
    config.validate()?;
    if labels.len() != latent.rows() {
        return Err(Error::DimMismatch {
            op: "classifier labels",
            left_rows: latent.rows(),
            left_cols: latent.cols(),
            right_rows: 1,
            right_cols: labels.len(),
        });
    }
    let targets = label_column(labels)?;
    let positives = labels.iter().filter(|&&l| l == 1).count();
    if positives == 0 || positives == labels.len() {
        return Err(Error::SingleClass {
            context: "classifier training".into(),
        });
    }

    let n = latent.rows();
    let order = rng.shuffled_indices(n);
    let val_count = (config.validation_split * n as f64).round() as usize;
    let (fit_idx, val_idx) = order.split_at(n - val_count);
    if fit_idx.is_empty() {
        return Err(Error::TooFewSamples {
            context: "classifier training after validation holdout".into(),
            needed: 1,
            got: 0,
        });
    }
    let fit_x = latent.select_rows(fit_idx)?;
    let fit_y = targets.select_rows(fit_idx)?;
    let (val_x, val_y) = if val_idx.is_empty() {
        (None, None)
    } else {
        (
            Some(latent.select_rows(val_idx)?),
            Some(targets.select_rows(val_idx)?),
        )
    };

    let mut layers = vec![
        DenseLayer::init(latent.cols(), config.hidden_dim, Activation::Relu, rng, 1.0)?,
        DenseLayer::init(config.hidden_dim, 1, Activation::Sigmoid, rng, 1.0)?,
    ];
    let mut opt = NetAdam::new(&layers, AdamConfig::with_learning_rate(config.learning_rate))?;

    let fit_n = fit_x.rows();
    let mut loss_trace = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        let epoch_order = rng.shuffled_indices(fit_n);
        let mut epoch_loss = 0.0;
        for chunk in epoch_order.chunks(config.batch_size) {
            let bx = fit_x.select_rows(chunk)?;
            let by = fit_y.select_rows(chunk)?;
            let cache = forward_cached(&layers, &bx)?;
            let (loss, grad) = bce_loss(cache.output(), &by)?;
            let grads = backprop(&layers, &cache, &grad)?;
            opt.step(&mut layers, &grads.layers)?;
            epoch_loss += loss * chunk.len() as f64;
        }
        let validation = match (&val_x, &val_y) {
            (Some(vx), Some(vy)) => {
                let probs = crate::nn::forward(&layers, vx)?;
                Some(bce_loss(&probs, vy)?.0)
            }
            _ => None,
        };
        loss_trace.push(EpochLoss {
            train: epoch_loss / fit_n as f64,
            validation,
        });
    }

    Ok(ClassifierModel {
        layers,
        threshold: config.threshold,
        loss_trace,
    })
}

impl ClassifierModel {
    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    /// Positive-class probability per row, one column.
    pub fn predict_proba(&self, latent: &Matrix) -> Result<Matrix> {
        crate::nn::forward(&self.layers, latent)
    }

    /// Hard labels; a probability exactly at the threshold is positive.
    pub fn predict_labels(&self, latent: &Matrix) -> Result<Vec<u8>> {
        let probs = self.predict_proba(latent)?;
        Ok(probs
            .data()
            .iter()
            .map(|&p| u8::from(p >= self.threshold))
            .collect())
    }

    /// Assembles a model from explicit layers; used by tests that need
    /// hand-crafted weights.
    pub fn from_parts(layers: Vec<DenseLayer>, threshold: f64) -> Result<ClassifierModel> {
        if layers.is_empty() {
            return Err(Error::EmptyInput {
                what: "classifier layers".into(),
            });
        }
        if layers.last().unwrap().out_dim() != 1 {
            return Err(Error::Config(
                "a binary classifier must end in a single output unit".into(),
            ));
        }
        Ok(ClassifierModel {
            layers,
            threshold,
            loss_trace: Vec::new(),
        })
    }
}
