//! The six pipeline stages and their monolithic composition.
//!
//! Every stage is a pure function of (config, input artifacts); randomness
//! comes from per-stage streams derived from the run seed, so invoking the
//! stages one process at a time produces byte-identical artifacts to a
//! single `run_pipeline` call.
//!
//! Leakage discipline: the train/test partition is drawn once, up front,
//! and every fitted object (selection statistics, scalers, autoencoders,
//! the generator, the classifier) sees training rows only. Each checkpoint
//! records the hash of the training sample ids it was fitted on, and
//! `verify_leakage` checks the whole chain against the split.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::autoencoder::{fuse_latents, AeConfig, Autoencoder, FusedLatent, LatentBlock};
use crate::classifier::{train_classifier, ClassifierModel};
use crate::error::{Error, Result};
use crate::featsel::{select_features, SelectionModel};
use crate::gan::{normalize_latent, oversample_to_balance, train_gan, GanModel};
use crate::ingest::{
    align_samples, load_gene_list, load_labels, load_matrix, restrict_to_gene_list,
    validate_gene_symbols, FeatureMatrix, LabelVector, MatrixKind,
};
use crate::metrics::{confusion, metric_suite, roc_auc};
use crate::pipeline::artifact::{id_hash, load_artifact, load_artifact_hash, save_artifact};
use crate::pipeline::config::PipelineConfig;
use crate::pipeline::lock::LockGuard;
use crate::pipeline::manifest::{RunManifest, StageRecord, STAGE_ORDER};
use crate::report::EvalReport;
use crate::rng::RngHandle;
use crate::scaler::MinMaxScaler;

/// Reserved random streams, one per stochastic stage. Staged and monolithic
/// executions derive the same stream from the same seed, which is what makes
/// them bit-identical.
pub mod streams {
    pub const SPLIT: u64 = 1;
    pub const AUTOENCODER_BASE: u64 = 0x100;
    pub const GAN: u64 = 0x200;
    pub const CLASSIFIER: u64 = 0x300;
}

/// Artifact file names inside the output directory.
pub mod files {
    pub const SPLIT: &str = "split.json";
    pub const FUSED: &str = "fused.json";
    pub const GAN: &str = "gan.json";
    pub const GAN_LOSS: &str = "gan_loss.tsv";
    pub const BALANCED: &str = "balanced.json";
    pub const CLASSIFIER: &str = "classifier.json";
    pub const CLASSIFIER_LOSS: &str = "classifier_loss.tsv";
    pub const REPORT: &str = "report.json";
    pub const ROC_TSV: &str = "roc.tsv";
    pub const ROC_SVG: &str = "roc.svg";

    pub fn selection_model(tag: &str) -> String {
        format!("selection_{tag}.json")
    }

    pub fn selection_report(tag: &str) -> String {
        format!("selection_{tag}.tsv")
    }

    pub fn autoencoder(tag: &str) -> String {
        format!("autoencoder_{tag}.json")
    }

    pub fn autoencoder_loss(tag: &str) -> String {
        format!("autoencoder_{tag}_loss.tsv")
    }
}

mod kinds {
    pub const SPLIT: &str = "split";
    pub const SELECTION: &str = "selection";
    pub const AUTOENCODER: &str = "autoencoder";
    pub const FUSED: &str = "fused";
    pub const GAN: &str = "gan";
    pub const BALANCED: &str = "balanced";
    pub const CLASSIFIER: &str = "classifier";
}

/// The train/test partition, stored by sample id so later stages can verify
/// they are still looking at the same data files.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SplitArtifact {
    pub seed: u64,
    pub split_fraction: f64,
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
}

/// Concatenated per-matrix latent blocks for both partitions, plus labels,
/// so downstream stages no longer touch the raw matrices.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FusedArtifact {
    pub train: FusedLatent,
    pub train_labels: Vec<u8>,
    pub test: FusedLatent,
    pub test_labels: Vec<u8>,
}

/// The generator with the min-max scaler that maps between latent space and
/// its [0, 1] training range.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GanArtifact {
    pub model: GanModel,
    pub scaler: MinMaxScaler,
}

/// Classifier training set: real training rows plus any generated rows,
/// flagged per row.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BalancedArtifact {
    pub values: crate::Matrix,
    pub labels: Vec<u8>,
    pub synthetic: Vec<bool>,
}

/// All input matrices and labels, restricted to the shared samples, in label
/// file order.
pub struct AlignedInputs {
    pub matrices: Vec<FeatureMatrix>,
    pub labels: LabelVector,
}

/// Loads, filters, and aligns every input named in the config. Deterministic,
/// so each stage can re-derive the same view of the raw data.
pub fn load_inputs(config: &PipelineConfig) -> Result<AlignedInputs> {
    let gene_list = config
        .gene_list
        .as_deref()
        .map(load_gene_list)
        .transpose()?;
    let mut raw = Vec::with_capacity(config.matrices.len());
    for spec in &config.matrices {
        let mut matrix = load_matrix(&spec.path, spec.kind.clone(), spec.orientation)?;
        if spec.validate_symbols {
            let (kept, rejected) = validate_gene_symbols(&matrix)?;
            if !rejected.is_empty() {
                log::warn!(
                    "{}: dropped {} features with malformed gene symbols",
                    kept.kind,
                    rejected.len()
                );
            }
            matrix = kept;
        }
        if let (Some(genes), MatrixKind::Expression) = (&gene_list, &matrix.kind) {
            matrix = restrict_to_gene_list(&matrix, genes)?;
        }
        raw.push(matrix);
    }
    let labels = load_labels(&config.labels, config.positive_class.as_deref())?;
    let (matrices, labels) = align_samples(&raw, &labels)?;
    Ok(AlignedInputs { matrices, labels })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Positions of `ids` within `sample_ids`; errors if the data files no
/// longer contain a recorded sample.
fn indices_for(ids: &[String], sample_ids: &[String]) -> Result<Vec<usize>> {
    let pos: std::collections::HashMap<&str, usize> = sample_ids
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    ids.iter()
        .map(|id| {
            pos.get(id.as_str()).copied().ok_or_else(|| {
                Error::Config(format!(
                    "recorded sample `{id}` is missing from the current inputs; \
                     the data files changed since the split was drawn"
                ))
            })
        })
        .collect()
}

fn require_hash(found: &str, expected: &str, what: &str) -> Result<()> {
    if found == expected {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "{what} was fitted on a different training partition than the recorded split; \
             rerun the earlier stages into a clean output directory"
        )))
    }
}

fn total_features(matrices: &[FeatureMatrix]) -> usize {
    matrices.iter().map(|m| m.n_features()).sum()
}

/// Draws the train/test split and fits per-matrix feature selection on the
/// training rows. Writes the split, one selection model, and one selection
/// report per matrix.
pub fn stage_select(config: &PipelineConfig, _in_dir: &Path, out_dir: &Path) -> Result<StageRecord> {
    let started = Instant::now();
    let inputs = load_inputs(config)?;
    let n = inputs.labels.labels.len();
    let cols_in = total_features(&inputs.matrices);

    let mut rng = RngHandle::new(config.seed).split(streams::SPLIT);
    let (train_idx, test_idx) = rng.uniform_split(n, config.split_fraction)?;
    let train_labels = inputs.labels.select(&train_idx);
    let test_labels = inputs.labels.select(&test_idx);
    for (part, name) in [(&train_labels, "training"), (&test_labels, "held-out")] {
        if part.positive_count() == 0 || part.negative_count() == 0 {
            return Err(Error::SingleClass {
                context: format!("{name} partition (seed {})", config.seed),
            });
        }
    }

    let split = SplitArtifact {
        seed: config.seed,
        split_fraction: config.split_fraction,
        train_ids: train_labels.sample_ids.clone(),
        test_ids: test_labels.sample_ids.clone(),
    };
    let train_hash = id_hash(&split.train_ids);
    save_artifact(&out_dir.join(files::SPLIT), kinds::SPLIT, &train_hash, &split)?;

    let mut written = vec![files::SPLIT.to_string()];
    let mut cols_out = 0;
    for matrix in &inputs.matrices {
        let tag = matrix.kind.tag().to_string();
        let train_rows = matrix.select_samples(&train_idx)?;
        let selection = select_features(&train_rows, &train_labels.labels, &config.selection)?;
        cols_out += selection.model.kept_indices.len();
        log::info!(
            "{}: kept {} of {} features",
            tag,
            selection.model.kept_indices.len(),
            matrix.n_features()
        );

        let model_file = files::selection_model(&tag);
        save_artifact(
            &out_dir.join(&model_file),
            kinds::SELECTION,
            &train_hash,
            &selection.model,
        )?;
        let report_file = files::selection_report(&tag);
        write_text(&out_dir.join(&report_file), &selection.report.to_tsv())?;
        written.push(model_file);
        written.push(report_file);
    }

    Ok(StageRecord {
        stage: "select".into(),
        rows_in: n,
        cols_in,
        rows_out: train_idx.len(),
        cols_out,
        wall_ms: started.elapsed().as_millis() as u64,
        files: written,
    })
}

/// Trains one autoencoder per matrix on the selected, normalized training
/// rows. The requested bottleneck width is clamped below the surviving
/// feature count when selection was aggressive.
pub fn stage_train_ae(config: &PipelineConfig, in_dir: &Path, out_dir: &Path) -> Result<StageRecord> {
    let started = Instant::now();
    let inputs = load_inputs(config)?;
    let (split, train_hash): (SplitArtifact, String) =
        load_artifact(&in_dir.join(files::SPLIT), kinds::SPLIT)?;
    let train_idx = indices_for(&split.train_ids, &inputs.labels.sample_ids)?;

    let mut written = Vec::new();
    let mut cols_in = 0;
    let mut cols_out = 0;
    for (i, matrix) in inputs.matrices.iter().enumerate() {
        let tag = matrix.kind.tag().to_string();
        let model_file = files::selection_model(&tag);
        let (model, model_hash): (SelectionModel, String) =
            load_artifact(&in_dir.join(&model_file), kinds::SELECTION)?;
        require_hash(&model_hash, &train_hash, &format!("selection model `{tag}`"))?;

        let reduced = model.apply(matrix)?;
        let train_rows = reduced.select_samples(&train_idx)?;
        let kept = train_rows.n_features();
        if kept < 2 {
            return Err(Error::Config(format!(
                "matrix `{tag}`: only {kept} feature survived selection; \
                 a bottleneck needs at least 2, relax the thresholds"
            )));
        }
        let requested = config.latent_dim_for(i);
        let latent_dim = requested.min(kept - 1);
        if latent_dim < requested {
            log::warn!(
                "{tag}: latent_dim {requested} clamped to {latent_dim} \
                 ({kept} features survived selection)"
            );
        }
        let ae_config = AeConfig {
            latent_dim,
            ..config.autoencoder
        };
        let mut rng = RngHandle::new(config.seed).split(streams::AUTOENCODER_BASE + i as u64);
        let ae = Autoencoder::train(&train_rows.values, &ae_config, &mut rng)?;
        cols_in += kept;
        cols_out += latent_dim;

        let ae_file = files::autoencoder(&tag);
        save_artifact(&out_dir.join(&ae_file), kinds::AUTOENCODER, &train_hash, &ae)?;
        let mut trace = String::from("epoch\tmse\n");
        for (epoch, loss) in ae.loss_trace.iter().enumerate() {
            trace.push_str(&format!("{epoch}\t{loss}\n"));
        }
        let loss_file = files::autoencoder_loss(&tag);
        write_text(&out_dir.join(&loss_file), &trace)?;
        written.push(ae_file);
        written.push(loss_file);
    }

    Ok(StageRecord {
        stage: "train-ae".into(),
        rows_in: train_idx.len(),
        cols_in,
        rows_out: train_idx.len(),
        cols_out,
        wall_ms: started.elapsed().as_millis() as u64,
        files: written,
    })
}

/// Encodes every matrix with its trained autoencoder and concatenates the
/// latent blocks into one table per partition.
pub fn stage_fuse(config: &PipelineConfig, in_dir: &Path, out_dir: &Path) -> Result<StageRecord> {
    let started = Instant::now();
    let inputs = load_inputs(config)?;
    let (split, train_hash): (SplitArtifact, String) =
        load_artifact(&in_dir.join(files::SPLIT), kinds::SPLIT)?;
    let train_idx = indices_for(&split.train_ids, &inputs.labels.sample_ids)?;
    let test_idx = indices_for(&split.test_ids, &inputs.labels.sample_ids)?;

    let mut train_blocks = Vec::new();
    let mut test_blocks = Vec::new();
    let mut cols_in = 0;
    for matrix in &inputs.matrices {
        let tag = matrix.kind.tag().to_string();
        let (model, model_hash): (SelectionModel, String) =
            load_artifact(&in_dir.join(files::selection_model(&tag)), kinds::SELECTION)?;
        require_hash(&model_hash, &train_hash, &format!("selection model `{tag}`"))?;
        let (ae, ae_hash): (Autoencoder, String) =
            load_artifact(&in_dir.join(files::autoencoder(&tag)), kinds::AUTOENCODER)?;
        require_hash(&ae_hash, &train_hash, &format!("autoencoder `{tag}`"))?;

        let reduced = model.apply(matrix)?;
        cols_in += reduced.n_features();
        for (idx, blocks) in [(&train_idx, &mut train_blocks), (&test_idx, &mut test_blocks)] {
            let rows = reduced.select_samples(idx)?;
            blocks.push(LatentBlock {
                source: tag.clone(),
                sample_ids: rows.sample_ids.clone(),
                values: ae.encode(&rows.values)?,
            });
        }
    }

    let fused = FusedArtifact {
        train: fuse_latents(&train_blocks)?,
        train_labels: inputs.labels.select(&train_idx).labels,
        test: fuse_latents(&test_blocks)?,
        test_labels: inputs.labels.select(&test_idx).labels,
    };
    let cols_out = fused.train.values.cols();
    save_artifact(&out_dir.join(files::FUSED), kinds::FUSED, &train_hash, &fused)?;

    Ok(StageRecord {
        stage: "fuse".into(),
        rows_in: inputs.labels.labels.len(),
        cols_in,
        rows_out: fused.train.values.rows() + fused.test.values.rows(),
        cols_out,
        wall_ms: started.elapsed().as_millis() as u64,
        files: vec![files::FUSED.to_string()],
    })
}

/// Trains the generator on normalized minority-class latent rows and appends
/// synthetic rows until the classes balance. With `oversample = false` (or an
/// already balanced training set) the latent rows pass through untouched,
/// which is the ablation baseline.
pub fn stage_oversample(config: &PipelineConfig, in_dir: &Path, out_dir: &Path) -> Result<StageRecord> {
    let started = Instant::now();
    let (fused, train_hash): (FusedArtifact, String) =
        load_artifact(&in_dir.join(files::FUSED), kinds::FUSED)?;
    let latent_width = fused.train.values.cols();
    let rows_in = fused.train.values.rows();

    let positives = fused.train_labels.iter().filter(|&&l| l == 1).count();
    let negatives = fused.train_labels.len() - positives;
    let mut written = Vec::new();

    let balanced = if !config.oversample || positives == negatives {
        if config.oversample {
            log::info!("training classes already balanced; skipping oversampling");
        }
        BalancedArtifact {
            values: fused.train.values.clone(),
            labels: fused.train_labels.clone(),
            synthetic: vec![false; fused.train_labels.len()],
        }
    } else {
        let minority_label = u8::from(positives < negatives);
        let minority_rows: Vec<usize> = fused
            .train_labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == minority_label)
            .map(|(i, _)| i)
            .collect();
        let (scaler, minority01) = normalize_latent(&fused.train.values, &minority_rows)?;
        let mut rng = RngHandle::new(config.seed).split(streams::GAN);
        let model = train_gan(&minority01, &config.gan, &mut rng)?;
        let oversampled = oversample_to_balance(
            &fused.train.values,
            &fused.train_labels,
            &scaler,
            &model,
            &mut rng,
        )?;

        write_text(&out_dir.join(files::GAN_LOSS), &model.loss_history_tsv())?;
        let gan = GanArtifact { model, scaler };
        save_artifact(&out_dir.join(files::GAN), kinds::GAN, &train_hash, &gan)?;
        written.push(files::GAN.to_string());
        written.push(files::GAN_LOSS.to_string());
        BalancedArtifact {
            values: oversampled.values,
            labels: oversampled.labels,
            synthetic: oversampled.synthetic,
        }
    };

    let rows_out = balanced.values.rows();
    save_artifact(&out_dir.join(files::BALANCED), kinds::BALANCED, &train_hash, &balanced)?;
    written.push(files::BALANCED.to_string());

    Ok(StageRecord {
        stage: "oversample".into(),
        rows_in,
        cols_in: latent_width,
        rows_out,
        cols_out: latent_width,
        wall_ms: started.elapsed().as_millis() as u64,
        files: written,
    })
}

/// Trains the final classifier on the balanced latent table.
pub fn stage_train_clf(config: &PipelineConfig, in_dir: &Path, out_dir: &Path) -> Result<StageRecord> {
    let started = Instant::now();
    let (balanced, train_hash): (BalancedArtifact, String) =
        load_artifact(&in_dir.join(files::BALANCED), kinds::BALANCED)?;

    let mut rng = RngHandle::new(config.seed).split(streams::CLASSIFIER);
    let model = train_classifier(&balanced.values, &balanced.labels, &config.classifier, &mut rng)?;

    let mut trace = String::from("epoch\ttrain_loss\tval_loss\n");
    for (epoch, loss) in model.loss_trace.iter().enumerate() {
        let val = loss
            .validation
            .map(|v| v.to_string())
            .unwrap_or_else(|| "NA".into());
        trace.push_str(&format!("{epoch}\t{}\t{val}\n", loss.train));
    }
    write_text(&out_dir.join(files::CLASSIFIER_LOSS), &trace)?;
    save_artifact(&out_dir.join(files::CLASSIFIER), kinds::CLASSIFIER, &train_hash, &model)?;

    Ok(StageRecord {
        stage: "train-clf".into(),
        rows_in: balanced.values.rows(),
        cols_in: balanced.values.cols(),
        rows_out: balanced.values.rows(),
        cols_out: 1,
        wall_ms: started.elapsed().as_millis() as u64,
        files: vec![
            files::CLASSIFIER.to_string(),
            files::CLASSIFIER_LOSS.to_string(),
        ],
    })
}

/// Scores the held-out rows and writes the report, the ROC table, and the
/// ROC plot. Runs the leakage check across every checkpoint first.
pub fn stage_evaluate(
    config: &PipelineConfig,
    in_dir: &Path,
    out_dir: &Path,
) -> Result<(StageRecord, EvalReport)> {
    let started = Instant::now();
    verify_leakage(config, in_dir)?;

    let (split, _): (SplitArtifact, String) =
        load_artifact(&in_dir.join(files::SPLIT), kinds::SPLIT)?;
    let (fused, _): (FusedArtifact, String) =
        load_artifact(&in_dir.join(files::FUSED), kinds::FUSED)?;
    let (balanced, _): (BalancedArtifact, String) =
        load_artifact(&in_dir.join(files::BALANCED), kinds::BALANCED)?;
    let (model, _): (ClassifierModel, String) =
        load_artifact(&in_dir.join(files::CLASSIFIER), kinds::CLASSIFIER)?;

    let probs = model.predict_proba(&fused.test.values)?;
    let scores: Vec<f64> = probs.data().to_vec();
    let predictions = model.predict_labels(&fused.test.values)?;
    let counts = confusion(&fused.test_labels, &predictions)?;
    let suite = metric_suite(&counts)?;
    let (roc_points, auc) = roc_auc(&fused.test_labels, &scores)?;

    let synthetic = balanced.synthetic.iter().filter(|&&s| s).count();
    let report = EvalReport::new(
        config.seed,
        split.train_ids.len(),
        synthetic,
        fused.test_labels.len(),
        counts,
        suite,
        roc_points,
        auc,
    );
    report.validate()?;

    write_text(&out_dir.join(files::REPORT), &report.to_json()?)?;
    write_text(&out_dir.join(files::ROC_TSV), &report.roc_tsv())?;
    write_text(&out_dir.join(files::ROC_SVG), &report.roc_svg())?;

    let record = StageRecord {
        stage: "evaluate".into(),
        rows_in: fused.test.values.rows(),
        cols_in: fused.test.values.cols(),
        rows_out: fused.test.values.rows(),
        cols_out: 1,
        wall_ms: started.elapsed().as_millis() as u64,
        files: vec![
            files::REPORT.to_string(),
            files::ROC_TSV.to_string(),
            files::ROC_SVG.to_string(),
        ],
    };
    Ok((record, report))
}

/// Asserts that every checkpoint present in `dir` was fitted on exactly the
/// training ids recorded in the split. A mismatch means some artifact came
/// from a different run and test data may have leaked into it.
pub fn verify_leakage(config: &PipelineConfig, dir: &Path) -> Result<()> {
    let (split, reference): (SplitArtifact, String) =
        load_artifact(&dir.join(files::SPLIT), kinds::SPLIT)?;
    require_hash(&id_hash(&split.train_ids), &reference, "the split record itself")?;

    let mut expected: Vec<(String, &str)> = Vec::new();
    for spec in &config.matrices {
        let tag = spec.kind.tag();
        expected.push((files::selection_model(tag), kinds::SELECTION));
        expected.push((files::autoencoder(tag), kinds::AUTOENCODER));
    }
    expected.push((files::FUSED.to_string(), kinds::FUSED));
    expected.push((files::GAN.to_string(), kinds::GAN));
    expected.push((files::BALANCED.to_string(), kinds::BALANCED));
    expected.push((files::CLASSIFIER.to_string(), kinds::CLASSIFIER));

    for (name, kind) in expected {
        let path = dir.join(&name);
        if !path.exists() {
            continue;
        }
        let found = load_artifact_hash(&path, kind)?;
        require_hash(&found, &reference, &format!("artifact `{name}`"))?;
    }
    Ok(())
}

/// Runs one named stage and folds its record into the on-disk manifest.
/// This is what the per-stage subcommands call.
pub fn run_stage(
    name: &str,
    config: &PipelineConfig,
    in_dir: &Path,
    out_dir: &Path,
) -> Result<Option<EvalReport>> {
    let _lock = LockGuard::acquire(out_dir)?;
    let mut manifest = RunManifest::load_or_new(out_dir, &config.config_hash(), config.seed)?;
    let report = dispatch_stage(name, config, in_dir, out_dir, &mut manifest)?;
    manifest.save(out_dir)?;
    Ok(report)
}

fn dispatch_stage(
    name: &str,
    config: &PipelineConfig,
    in_dir: &Path,
    out_dir: &Path,
    manifest: &mut RunManifest,
) -> Result<Option<EvalReport>> {
    let stage: &'static str = STAGE_ORDER
        .iter()
        .copied()
        .find(|s| *s == name)
        .ok_or_else(|| Error::Config(format!("unknown stage `{name}`")))?;
    let mut report = None;
    let record = match stage {
        "select" => stage_select(config, in_dir, out_dir),
        "train-ae" => stage_train_ae(config, in_dir, out_dir),
        "fuse" => stage_fuse(config, in_dir, out_dir),
        "oversample" => stage_oversample(config, in_dir, out_dir),
        "train-clf" => stage_train_clf(config, in_dir, out_dir),
        "evaluate" => stage_evaluate(config, in_dir, out_dir).map(|(record, r)| {
            report = Some(r);
            record
        }),
        _ => unreachable!(),
    }
    .map_err(|e| e.in_stage(stage))?;
    manifest.upsert_stage(record);
    if manifest.train_id_hash.is_none() {
        let split_path = out_dir.join(files::SPLIT);
        if split_path.exists() {
            manifest.train_id_hash = Some(load_artifact_hash(&split_path, kinds::SPLIT)?);
        }
    }
    Ok(report)
}

/// The whole pipeline in one call: all six stages in order against a single
/// output directory, manifest saved after every stage so failed runs leave
/// their progress behind for inspection.
pub fn run_pipeline(config: &PipelineConfig) -> Result<(EvalReport, RunManifest)> {
    config.validate()?;
    let out_dir = config.output_dir.clone();
    let _lock = LockGuard::acquire(&out_dir)?;
    let mut manifest = RunManifest::new(config.config_hash(), config.seed);
    let mut report = None;
    for stage in STAGE_ORDER {
        let produced = dispatch_stage(stage, config, &out_dir, &out_dir, &mut manifest)?;
        manifest.save(&out_dir)?;
        if produced.is_some() {
            report = produced;
        }
    }
    let report = report.expect("evaluate stage always yields a report");
    Ok((report, manifest))
}
