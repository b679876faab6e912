//! Single-hidden-layer autoencoders for per-matrix compression, and the
//! fusion of their latent blocks into one shared representation.
//!
//! Each feature matrix gets its own autoencoder: inputs are min-max scaled
//! to the unit interval, squeezed through a ReLU bottleneck, and
//! reconstructed by a sigmoid output layer under mean squared error. The
//! bottleneck activations become that matrix's latent block; blocks are
//! concatenated sample-wise in the order the matrices were declared.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::{backprop, forward_cached, mse_loss, Activation, AdamConfig, DenseLayer, NetAdam};
use crate::rng::RngHandle;
use crate::scaler::MinMaxScaler;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AeConfig {
    pub latent_dim: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

impl Default for AeConfig {
    fn default() -> AeConfig {
        AeConfig {
            latent_dim: 64,
            epochs: 100,
            batch_size: 32,
            learning_rate: 1e-3,
        }
    }
}

impl AeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.latent_dim == 0 {
            return Err(Error::Config("latent_dim must be at least 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        AdamConfig::with_learning_rate(self.learning_rate).validate()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Autoencoder {
    scaler: MinMaxScaler,
    encoder: DenseLayer,
    decoder: DenseLayer,
    /// Mean training loss per epoch, in scaled space.
    pub loss_trace: Vec<f64>,
}

impl Autoencoder {
    /// Fits an autoencoder to raw feature rows with minibatch Adam.
    ///
    /// The bottleneck must be strictly narrower than the input; a latent
    /// space as wide as the data compresses nothing.
    pub fn train(data: &Matrix, config: &AeConfig, rng: &mut RngHandle) -> Result<Autoencoder> {
        config.validate()?;
        if data.is_empty() {
            return Err(Error::EmptyInput {
                what: "autoencoder training data".into(),
            });
        }
        if config.latent_dim >= data.cols() {
            return Err(Error::Config(format!(
                "latent_dim {} must be smaller than the feature count {}",
                config.latent_dim,
                data.cols()
            )));
        }

        let scaler = MinMaxScaler::fit(data)?;
        let scaled = scaler.transform(data)?;
        let mut layers = vec![
            DenseLayer::init(data.cols(), config.latent_dim, Activation::Relu, rng, 1.0)?,
            DenseLayer::init(config.latent_dim, data.cols(), Activation::Sigmoid, rng, 1.0)?,
        ];
        let mut opt = NetAdam::new(&layers, AdamConfig::with_learning_rate(config.learning_rate))?;

        let n = scaled.rows();
        let mut loss_trace = Vec::with_capacity(config.epochs);
        for _ in 0..config.epochs {
            let order = rng.shuffled_indices(n);
            let mut epoch_loss = 0.0;
            for chunk in order.chunks(config.batch_size) {
                let batch = scaled.select_rows(chunk)?;
                let cache = forward_cached(&layers, &batch)?;
                let (loss, grad) = mse_loss(cache.output(), &batch)?;
                let grads = backprop(&layers, &cache, &grad)?;
                opt.step(&mut layers, &grads.layers)?;
                epoch_loss += loss * chunk.len() as f64;
            }
            loss_trace.push(epoch_loss / n as f64);
        }

        let decoder = layers.pop().expect("two layers were built");
        let encoder = layers.pop().expect("two layers were built");
        Ok(Autoencoder {
            scaler,
            encoder,
            decoder,
            loss_trace,
        })
    }

    pub fn latent_dim(&self) -> usize {
        self.encoder.out_dim()
    }

    pub fn input_dim(&self) -> usize {
        self.encoder.in_dim()
    }

    /// Bottleneck activations for raw feature rows.
    pub fn encode(&self, data: &Matrix) -> Result<Matrix> {
        let scaled = self.scaler.transform(data)?;
        self.encoder.forward(&scaled)
    }

    /// Round trip through the bottleneck, still in scaled space.
    pub fn reconstruct_scaled(&self, data: &Matrix) -> Result<Matrix> {
        let scaled = self.scaler.transform(data)?;
        self.decoder.forward(&self.encoder.forward(&scaled)?)
    }

    /// Mean squared reconstruction error in scaled space.
    pub fn reconstruction_mse(&self, data: &Matrix) -> Result<f64> {
        let scaled = self.scaler.transform(data)?;
        let recon = self.decoder.forward(&self.encoder.forward(&scaled)?)?;
        let (loss, _) = mse_loss(&recon, &scaled)?;
        Ok(loss)
    }
}

/// One autoencoder's latent rows for a set of samples.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LatentBlock {
    /// Tag of the matrix this block came from.
    pub source: String,
    pub sample_ids: Vec<String>,
    pub values: Matrix,
}

/// Latent blocks concatenated feature-wise, samples kept in step.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FusedLatent {
    pub sample_ids: Vec<String>,
    pub values: Matrix,
    /// (source tag, latent width) in concatenation order.
    pub block_dims: Vec<(String, usize)>,
}

/// Concatenates latent blocks in the given order. Every block must carry
/// the same samples in the same order; fusion never reorders rows.
pub fn fuse_latents(blocks: &[LatentBlock]) -> Result<FusedLatent> {
    let first = blocks.first().ok_or_else(|| Error::EmptyInput {
        what: "latent blocks".into(),
    })?;
    for block in &blocks[1..] {
        if block.sample_ids != first.sample_ids {
            return Err(Error::Config(format!(
                "latent block `{}` carries different samples than `{}`; all blocks must share one sample order",
                block.source, first.source
            )));
        }
    }
    let parts: Vec<&Matrix> = blocks.iter().map(|b| &b.values).collect();
    Ok(FusedLatent {
        sample_ids: first.sample_ids.clone(),
        values: Matrix::hstack(&parts)?,
        block_dims: blocks
            .iter()
            .map(|b| (b.source.clone(), b.values.cols()))
            .collect(),
    })
}
