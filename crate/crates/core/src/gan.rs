//! Adversarial oversampling of the minority class.
//!
//! A generator (dense 128 ReLU, sigmoid output) learns to imitate
//! minority-class rows of the fused latent space while a discriminator
//! (dense 128 ReLU, one sigmoid unit) learns to tell real rows from
//! generated ones; the two alternate updates. Because the generator ends in
//! a sigmoid, it works in a per-column min-max normalized copy of the
//! latent space and synthetic rows are mapped back through the recorded
//! inverse. Oversampling happens strictly on training rows, after the
//! train/test split, and every synthetic row is flagged so it can never
//! reach evaluation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::{
    backprop, bce_loss, forward, forward_cached, Activation, AdamConfig, DenseLayer, LayerGrad,
    NetAdam,
};
use crate::rng::RngHandle;
use crate::scaler::MinMaxScaler;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GanConfig {
    /// Width of the standard-normal noise fed to the generator.
    pub noise_dim: usize,
    /// Alternating iterations; each runs the discriminator then the
    /// generator.
    pub steps: usize,
    /// Rows per update, capped at the minority count during training.
    pub batch_size: usize,
    pub d_steps_per_g_step: usize,
    pub hidden_dim: usize,
    pub learning_rate: f64,
}

impl Default for GanConfig {
    fn default() -> GanConfig {
        GanConfig {
            noise_dim: 32,
            steps: 2000,
            batch_size: 32,
            d_steps_per_g_step: 1,
            hidden_dim: 128,
            learning_rate: 2e-4,
        }
    }
}

impl GanConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("noise_dim", self.noise_dim),
            ("steps", self.steps),
            ("batch_size", self.batch_size),
            ("d_steps_per_g_step", self.d_steps_per_g_step),
            ("hidden_dim", self.hidden_dim),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        AdamConfig::with_learning_rate(self.learning_rate).validate()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GanModel {
    pub generator: Vec<DenseLayer>,
    pub discriminator: Vec<DenseLayer>,
    pub noise_dim: usize,
    /// (discriminator loss, generator loss) per alternating step.
    pub loss_history: Vec<(f64, f64)>,
}

impl GanModel {
    pub fn latent_width(&self) -> usize {
        self.discriminator[0].in_dim()
    }

    /// Synthetic rows in the normalized space, elementwise in (0, 1).
    pub fn generate01(&self, count: usize, rng: &mut RngHandle) -> Result<Matrix> {
        let noise = rng.standard_normal_matrix(count, self.noise_dim);
        forward(&self.generator, &noise)
    }

    /// The discriminator objective on given batches, without any update:
    /// mean −log D(real) plus mean −log(1 − D(fake)).
    pub fn discriminator_loss(&self, real01: &Matrix, fake01: &Matrix) -> Result<f64> {
        let d_real = forward(&self.discriminator, real01)?;
        let d_fake = forward(&self.discriminator, fake01)?;
        let (l_real, _) = bce_loss(&d_real, &Matrix::from_fn(d_real.rows(), 1, |_, _| 1.0))?;
        let (l_fake, _) = bce_loss(&d_fake, &Matrix::zeros(d_fake.rows(), 1))?;
        Ok(l_real + l_fake)
    }

    /// The generator objective on a noise batch, without any update:
    /// mean −log D(G(z)).
    pub fn generator_loss(&self, noise: &Matrix) -> Result<f64> {
        let fake = forward(&self.generator, noise)?;
        let d_fake = forward(&self.discriminator, &fake)?;
        let (l, _) = bce_loss(&d_fake, &Matrix::from_fn(d_fake.rows(), 1, |_, _| 1.0))?;
        Ok(l)
    }

    /// Loss history as `step\td_loss\tg_loss` rows.
    pub fn loss_history_tsv(&self) -> String {
        let mut out = String::from("step\td_loss\tg_loss\n");
        for (i, (d, g)) in self.loss_history.iter().enumerate() {
            out.push_str(&format!("{i}\t{d}\t{g}\n"));
        }
        out
    }
}

pub struct GanTrainer {
    pub model: GanModel,
    opt_d: NetAdam,
    opt_g: NetAdam,
}

impl GanTrainer {
    /// Fresh networks for a latent space of the given width. Output layers
    /// start small so both networks emit values near one half and the
    /// discriminator loss starts near 2 ln 2.
    pub fn new(latent_width: usize, config: &GanConfig, rng: &mut RngHandle) -> Result<GanTrainer> {
        config.validate()?;
        if latent_width == 0 {
            return Err(Error::EmptyInput {
                what: "gan latent width".into(),
            });
        }
        let generator = vec![
            DenseLayer::init(config.noise_dim, config.hidden_dim, Activation::Relu, rng, 1.0)?,
            DenseLayer::init(config.hidden_dim, latent_width, Activation::Sigmoid, rng, 0.1)?,
        ];
        let discriminator = vec![
            DenseLayer::init(latent_width, config.hidden_dim, Activation::Relu, rng, 1.0)?,
            DenseLayer::init(config.hidden_dim, 1, Activation::Sigmoid, rng, 0.1)?,
        ];
        let adam = AdamConfig::with_learning_rate(config.learning_rate);
        let opt_g = NetAdam::new(&generator, adam)?;
        let opt_d = NetAdam::new(&discriminator, adam)?;
        Ok(GanTrainer {
            model: GanModel {
                generator,
                discriminator,
                noise_dim: config.noise_dim,
                loss_history: Vec::new(),
            },
            opt_d,
            opt_g,
        })
    }

    /// One Adam update of the discriminator against a real and a fake
    /// batch; the generator is untouched. Returns the pre-update loss.
    pub fn discriminator_step(&mut self, real01: &Matrix, fake01: &Matrix) -> Result<f64> {
        if real01.cols() != fake01.cols() {
            return Err(Error::DimMismatch {
                op: "discriminator step",
                left_rows: real01.rows(),
                left_cols: real01.cols(),
                right_rows: fake01.rows(),
                right_cols: fake01.cols(),
            });
        }
        let disc = &mut self.model.discriminator;
        let cache_r = forward_cached(disc, real01)?;
        let ones = Matrix::from_fn(real01.rows(), 1, |_, _| 1.0);
        let (l_real, grad_r) = bce_loss(cache_r.output(), &ones)?;
        let grads_r = backprop(disc, &cache_r, &grad_r)?;

        let cache_f = forward_cached(disc, fake01)?;
        let zeros = Matrix::zeros(fake01.rows(), 1);
        let (l_fake, grad_f) = bce_loss(cache_f.output(), &zeros)?;
        let grads_f = backprop(disc, &cache_f, &grad_f)?;

        let combined = add_layer_grads(grads_r.layers, &grads_f.layers)?;
        self.opt_d.step(disc, &combined)?;
        Ok(l_real + l_fake)
    }

    /// One Adam update of the generator through the frozen discriminator.
    /// Returns the pre-update loss.
    pub fn generator_step(&mut self, noise: &Matrix) -> Result<f64> {
        if noise.cols() != self.model.noise_dim {
            return Err(Error::DimMismatch {
                op: "generator step",
                left_rows: noise.rows(),
                left_cols: noise.cols(),
                right_rows: 1,
                right_cols: self.model.noise_dim,
            });
        }
        let cache_g = forward_cached(&self.model.generator, noise)?;
        let cache_d = forward_cached(&self.model.discriminator, cache_g.output())?;
        let ones = Matrix::from_fn(noise.rows(), 1, |_, _| 1.0);
        let (l_g, grad_out) = bce_loss(cache_d.output(), &ones)?;
        // the discriminator only relays the gradient to its input here
        let through_d = backprop(&self.model.discriminator, &cache_d, &grad_out)?;
        let grads_g = backprop(&self.model.generator, &cache_g, &through_d.input)?;
        self.opt_g.step(&mut self.model.generator, &grads_g.layers)?;
        Ok(l_g)
    }
}

fn add_layer_grads(mut a: Vec<LayerGrad>, b: &[LayerGrad]) -> Result<Vec<LayerGrad>> {
    for (ga, gb) in a.iter_mut().zip(b) {
        ga.d_weights = ga.d_weights.add(&gb.d_weights)?;
        for (x, y) in ga.d_biases.iter_mut().zip(&gb.d_biases) {
            *x += y;
        }
    }
    Ok(a)
}

/// Fits the min-max map on all training latent rows and returns it along
/// with the normalized minority rows the adversaries will train on.
pub fn normalize_latent(
    train_latent: &Matrix,
    minority_rows: &[usize],
) -> Result<(MinMaxScaler, Matrix)> {
    let scaler = MinMaxScaler::fit(train_latent)?;
    let minority = train_latent.select_rows(minority_rows)?;
    let minority01 = scaler.transform(&minority)?;
    Ok((scaler, minority01))
}

/// Alternating adversarial training on normalized minority rows.
///
/// Each iteration runs `d_steps_per_g_step` discriminator updates (fresh
/// real sample and fresh noise each time) followed by one generator
/// update; the recorded pair is the last discriminator loss and the
/// generator loss of that iteration.
pub fn train_gan(minority01: &Matrix, config: &GanConfig, rng: &mut RngHandle) -> Result<GanModel> {
    config.validate()?;
    if minority01.rows() < 2 {
        return Err(Error::TooFewSamples {
            context: "gan training minority rows".into(),
            needed: 2,
            got: minority01.rows(),
        });
    }
    if minority01.data().iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::Config(
            "gan training data must be normalized into [0, 1]".into(),
        ));
    }
    let n = minority01.rows();
    let batch = config.batch_size.min(n);
    let mut trainer = GanTrainer::new(minority01.cols(), config, rng)?;
    for _ in 0..config.steps {
        let mut d_loss = 0.0;
        for _ in 0..config.d_steps_per_g_step {
            let real_idx = rng.sample_with_replacement(n, batch);
            let real = minority01.select_rows(&real_idx)?;
            let noise = rng.standard_normal_matrix(batch, config.noise_dim);
            let fake = forward(&trainer.model.generator, &noise)?;
            d_loss = trainer.discriminator_step(&real, &fake)?;
        }
        let noise = rng.standard_normal_matrix(batch, config.noise_dim);
        let g_loss = trainer.generator_step(&noise)?;
        trainer.model.loss_history.push((d_loss, g_loss));
    }
    Ok(trainer.model)
}

#[derive(Clone, Debug)]
pub struct Oversampled {
    pub values: Matrix,
    pub labels: Vec<u8>,
    /// True for rows the generator produced; real rows keep `false`.
    pub synthetic: Vec<bool>,
}

/// Appends generated minority rows (denormalized back into latent scale)
/// until both classes have equal counts. Original rows are preserved
/// bit-identically and synthetic rows are flagged. Already balanced input
/// is returned unchanged.
pub fn oversample_to_balance(
    latent: &Matrix,
    labels: &[u8],
    scaler: &MinMaxScaler,
    model: &GanModel,
    rng: &mut RngHandle,
) -> Result<Oversampled> {
    if labels.len() != latent.rows() {
        return Err(Error::DimMismatch {
            op: "oversample labels",
            left_rows: latent.rows(),
            left_cols: latent.cols(),
            right_rows: 1,
            right_cols: labels.len(),
        });
    }
    let mut counts = [0usize; 2];
    for &l in labels {
        match l {
            0 | 1 => counts[l as usize] += 1,
            other => {
                return Err(Error::InvalidLabel {
                    value: other.to_string(),
                    message: "labels must be 0 or 1".into(),
                })
            }
        }
    }
    if counts[0] == counts[1] {
        return Ok(Oversampled {
            values: latent.clone(),
            labels: labels.to_vec(),
            synthetic: vec![false; labels.len()],
        });
    }
    let minority_label = u8::from(counts[1] < counts[0]);
    let need = counts[0].abs_diff(counts[1]);
    let fake01 = model.generate01(need, rng)?;
    let fake = scaler.inverse(&fake01)?;
    let values = latent.vstack(&fake)?;
    let mut out_labels = labels.to_vec();
    out_labels.extend(std::iter::repeat(minority_label).take(need));
    let mut synthetic = vec![false; labels.len()];
    synthetic.extend(std::iter::repeat(true).take(need));
    Ok(Oversampled {
        values,
        labels: out_labels,
        synthetic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> GanConfig {
        GanConfig {
            noise_dim: 4,
            steps: 800,
            batch_size: 16,
            d_steps_per_g_step: 1,
            hidden_dim: 16,
            learning_rate: 1e-3,
        }
    }

    #[test]
    fn config_rejects_zero_counts() {
        let bad = GanConfig {
            steps: 0,
            ..GanConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn fresh_networks_start_near_maximum_uncertainty() {
        let mut rng = RngHandle::new(17);
        let trainer = GanTrainer::new(3, &GanConfig::default(), &mut rng).unwrap();
        let real = rng.standard_normal_matrix(64, 3).map(|v| {
            // squash into [0,1] like normalized latent rows
            1.0 / (1.0 + (-v).exp())
        });
        let fake = trainer
            .model
            .generate01(64, &mut rng)
            .unwrap();
        let l_d = trainer.model.discriminator_loss(&real, &fake).unwrap();
        let two_ln2 = 2.0 * std::f64::consts::LN_2;
        assert!((l_d - two_ln2).abs() < 0.05, "initial loss {l_d}");
        let noise = rng.standard_normal_matrix(64, 32);
        let l_g = trainer.model.generator_loss(&noise).unwrap();
        assert!((l_g - std::f64::consts::LN_2).abs() < 0.05, "initial generator loss {l_g}");
    }

    #[test]
    fn discriminator_learns_to_separate_fixed_batches() {
        let mut rng = RngHandle::new(5);
        let mut trainer = GanTrainer::new(2, &tiny_config(), &mut rng).unwrap();
        let real = Matrix::from_fn(16, 2, |_, _| 0.8 + 0.05 * rng.standard_normal())
            .map(|v| v.clamp(0.0, 1.0));
        let fake = Matrix::from_fn(16, 2, |_, _| 0.2 + 0.05 * rng.standard_normal())
            .map(|v| v.clamp(0.0, 1.0));
        let first = trainer.discriminator_step(&real, &fake).unwrap();
        let mut last = first;
        for _ in 0..600 {
            last = trainer.discriminator_step(&real, &fake).unwrap();
        }
        assert!(last < 0.5 * first, "loss went {first} -> {last}");
    }

    #[test]
    fn generator_step_never_touches_the_discriminator() {
        let mut rng = RngHandle::new(9);
        let mut trainer = GanTrainer::new(3, &tiny_config(), &mut rng).unwrap();
        let disc_before = serde_json::to_string(&trainer.model.discriminator).unwrap();
        let gen_before = serde_json::to_string(&trainer.model.generator).unwrap();
        let noise = rng.standard_normal_matrix(8, 4);
        trainer.generator_step(&noise).unwrap();
        assert_eq!(
            disc_before,
            serde_json::to_string(&trainer.model.discriminator).unwrap()
        );
        assert_ne!(
            gen_before,
            serde_json::to_string(&trainer.model.generator).unwrap()
        );
    }

    #[test]
    fn discriminator_step_never_touches_the_generator() {
        let mut rng = RngHandle::new(10);
        let mut trainer = GanTrainer::new(3, &tiny_config(), &mut rng).unwrap();
        let gen_before = serde_json::to_string(&trainer.model.generator).unwrap();
        let real = Matrix::from_fn(8, 3, |r, c| ((r + c) as f64 * 0.09).fract());
        let fake = trainer.model.generate01(8, &mut rng).unwrap();
        trainer.discriminator_step(&real, &fake).unwrap();
        assert_eq!(
            gen_before,
            serde_json::to_string(&trainer.model.generator).unwrap()
        );
    }

    #[test]
    fn toy_distribution_is_matched_in_the_mean() {
        let mut rng = RngHandle::new(23);
        let minority01 = Matrix::from_fn(64, 1, |_, _| {
            (0.8 + 0.03 * rng.standard_normal()).clamp(0.0, 1.0)
        });
        let model = train_gan(&minority01, &tiny_config(), &mut rng).unwrap();
        let samples = model.generate01(1000, &mut rng).unwrap();
        let mean = samples.data().iter().sum::<f64>() / 1000.0;
        assert!((mean - 0.8).abs() < 0.1, "synthetic mean {mean}");
        assert_eq!(model.loss_history.len(), 800);
        assert!(model
            .loss_history
            .iter()
            .all(|(d, g)| d.is_finite() && g.is_finite()));
    }

    #[test]
    fn same_seed_reproduces_the_loss_history() {
        let data = Matrix::from_fn(16, 2, |r, c| ((r * 3 + c) as f64 * 0.05).fract());
        let cfg = GanConfig {
            steps: 40,
            ..tiny_config()
        };
        let a = train_gan(&data, &cfg, &mut RngHandle::new(31)).unwrap();
        let b = train_gan(&data, &cfg, &mut RngHandle::new(31)).unwrap();
        let c = train_gan(&data, &cfg, &mut RngHandle::new(32)).unwrap();
        assert_eq!(a.loss_history, b.loss_history);
        assert_ne!(a.loss_history, c.loss_history);
    }

    #[test]
    fn training_rejects_unnormalized_or_tiny_input() {
        let mut rng = RngHandle::new(2);
        let one_row = Matrix::new(1, 2, vec![0.5, 0.5]).unwrap();
        assert!(train_gan(&one_row, &tiny_config(), &mut rng).is_err());
        let out_of_range = Matrix::new(2, 2, vec![0.5, 1.5, 0.2, 0.3]).unwrap();
        assert!(train_gan(&out_of_range, &tiny_config(), &mut rng).is_err());
    }

    #[test]
    fn normalize_latent_fits_on_all_rows_and_returns_minority_block() {
        let latent = Matrix::new(4, 2, vec![0.0, 10.0, 2.0, 30.0, 4.0, 20.0, 1.0, 0.0]).unwrap();
        let (scaler, minority01) = normalize_latent(&latent, &[0, 3]).unwrap();
        assert_eq!(minority01.rows(), 2);
        assert!(minority01.data().iter().all(|v| (0.0..=1.0).contains(v)));
        // the map was fitted on all rows, so the global max still lands on 1
        let all01 = scaler.transform(&latent).unwrap();
        assert_eq!(all01.get(1, 1), 1.0);
        assert_eq!(all01.get(0, 0), 0.0);
    }

    #[test]
    fn oversampling_balances_and_flags_synthetic_rows() {
        let mut rng = RngHandle::new(77);
        let latent = Matrix::from_fn(12, 2, |r, c| (r * 2 + c) as f64);
        let labels: Vec<u8> = (0..12).map(|i| u8::from(i < 3)).collect();
        let (scaler, minority01) = normalize_latent(&latent, &[0, 1, 2]).unwrap();
        let cfg = GanConfig {
            steps: 20,
            ..tiny_config()
        };
        let model = train_gan(&minority01, &cfg, &mut rng).unwrap();
        let out = oversample_to_balance(&latent, &labels, &scaler, &model, &mut rng).unwrap();
        assert_eq!(out.values.rows(), 18);
        assert_eq!(out.labels.iter().filter(|&&l| l == 1).count(), 9);
        assert_eq!(out.labels.iter().filter(|&&l| l == 0).count(), 9);
        // originals first, bit for bit
        assert_eq!(&out.values.data()[..latent.data().len()], latent.data());
        assert_eq!(out.synthetic.iter().filter(|&&s| s).count(), 6);
        assert!(out.synthetic[..12].iter().all(|&s| !s));
        assert!(out.synthetic[12..].iter().all(|&s| s));
        // synthetic rows renormalize into the unit interval
        let tail: Vec<usize> = (12..18).collect();
        let synth = out.values.select_rows(&tail).unwrap();
        let renorm = scaler.transform(&synth).unwrap();
        assert!(renorm.data().iter().all(|v| (0.0..=1.0).contains(v)));

        // balanced input is a no-op
        let balanced: Vec<u8> = (0..12).map(|i| u8::from(i % 2 == 0)).collect();
        let out = oversample_to_balance(&latent, &balanced, &scaler, &model, &mut rng).unwrap();
        assert_eq!(out.values.data(), latent.data());
        assert!(out.synthetic.iter().all(|&s| !s));
    }
}
