//! Run configuration: one TOML file describing inputs, thresholds, and
//! training settings. Every section has defaults, so a minimal config only
//! lists the input files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::autoencoder::AeConfig;
use crate::classifier::ClassifierConfig;
use crate::error::{Error, Result};
use crate::featsel::Thresholds;
use crate::gan::GanConfig;
use crate::ingest::{MatrixKind, Orientation};

fn default_split() -> f64 {
    0.8
}

fn default_true() -> bool {
    true
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("pipeline-out")
}

/// One input matrix file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub path: PathBuf,
    pub kind: MatrixKind,
    /// On-disk layout; omics downloads are usually features-by-samples.
    #[serde(default = "MatrixSpec::default_orientation")]
    pub orientation: Orientation,
    /// Overrides `[autoencoder].latent_dim` for this matrix.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latent_dim: Option<usize>,
    /// Drop features whose names are not well-formed gene symbols.
    #[serde(default)]
    pub validate_symbols: bool,
}

impl MatrixSpec {
    fn default_orientation() -> Orientation {
        Orientation::SamplesByFeatures
    }
}

/// Full description of a run. Combined with the seed it determines every
/// output byte.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Fraction of samples assigned to the training partition.
    #[serde(default = "default_split")]
    pub split_fraction: f64,
    pub labels: PathBuf,
    /// Name of the label value mapped to 1. When absent, the label file
    /// must use literal `0` and `1` values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positive_class: Option<String>,
    /// Optional gene list; when set, expression matrices are restricted to it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gene_list: Option<PathBuf>,
    /// Whether the minority class is rebalanced with generated samples.
    /// Turning this off gives the ablation run used for comparison.
    #[serde(default = "default_true")]
    pub oversample: bool,
    #[serde(rename = "matrix")]
    pub matrices: Vec<MatrixSpec>,
    #[serde(default)]
    pub selection: Thresholds,
    #[serde(default)]
    pub autoencoder: AeConfig,
    #[serde(default)]
    pub gan: GanConfig,
    #[serde(default)]
    pub classifier: ClassifierConfig,
}

impl PipelineConfig {
    /// Parses a TOML file and resolves its relative paths against the file's
    /// directory, then validates. An unreadable config file is a
    /// configuration error, not a data error.
    pub fn load(path: &Path) -> Result<PipelineConfig> {
        let text = std::fs::read_to_string(path).map_err(|source| {
            Error::Config(format!("cannot read config {}: {source}", path.display()))
        })?;
        let mut config: PipelineConfig = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        config.resolve_paths(base);
        config.validate()?;
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&p);
            }
        };
        resolve(&mut self.labels);
        resolve(&mut self.output_dir);
        if let Some(genes) = &mut self.gene_list {
            resolve(genes);
        }
        for m in &mut self.matrices {
            resolve(&mut m.path);
        }
    }

    /// Structural checks plus existence of every referenced input file.
    pub fn validate(&self) -> Result<()> {
        if self.matrices.is_empty() {
            return Err(Error::Config("at least one [[matrix]] is required".into()));
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::Config(format!(
                "split_fraction must be strictly between 0 and 1, got {}",
                self.split_fraction
            )));
        }
        for (i, m) in self.matrices.iter().enumerate() {
            for other in &self.matrices[..i] {
                if other.kind == m.kind {
                    return Err(Error::Duplicate {
                        what: "matrix kind",
                        name: m.kind.tag().to_string(),
                    });
                }
            }
            if let Some(dim) = m.latent_dim {
                if dim == 0 {
                    return Err(Error::Config(format!(
                        "matrix `{}`: latent_dim must be at least 1",
                        m.kind
                    )));
                }
            }
            require_file(&m.path)?;
        }
        require_file(&self.labels)?;
        if let Some(genes) = &self.gene_list {
            require_file(genes)?;
        }
        self.selection.validate()?;
        self.autoencoder.validate()?;
        self.gan.validate()?;
        self.classifier.validate()?;
        Ok(())
    }

    /// Requested bottleneck width for matrix `i`, before any clamping to the
    /// surviving feature count.
    pub fn latent_dim_for(&self, i: usize) -> usize {
        self.matrices[i]
            .latent_dim
            .unwrap_or(self.autoencoder.latent_dim)
    }

    /// Hash of the effective configuration (after seed or output overrides),
    /// recorded in the manifest so a run can be matched to its config.
    pub fn config_hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        hex_string(&digest)
    }

    /// The config as a TOML document, usable as a starting point for edits.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self)
            .map_err(|e| Error::Config(format!("config serialization failed: {e}")))
    }

    /// Ready-to-run settings for the bundled synthetic benchmark, with file
    /// names relative to wherever the config file is written. The fold-change
    /// floor is relaxed to 0.5 because methylation beta values cannot double
    /// once they pass 0.5, and each matrix is compressed to 8 latent units.
    pub fn synthetic_benchmark() -> PipelineConfig {
        let matrix = |file: &str, kind: MatrixKind, orientation: Orientation| MatrixSpec {
            path: PathBuf::from(file),
            kind,
            orientation,
            latent_dim: Some(8),
            validate_symbols: false,
        };
        PipelineConfig {
            seed: 1,
            output_dir: PathBuf::from("out"),
            split_fraction: 0.8,
            labels: PathBuf::from(crate::synth::LABELS_FILE),
            positive_class: Some("case".into()),
            gene_list: None,
            oversample: true,
            matrices: vec![
                matrix(
                    crate::synth::EXPRESSION_FILE,
                    MatrixKind::Expression,
                    Orientation::SamplesByFeatures,
                ),
                matrix(
                    crate::synth::METHYLATION_FILE,
                    MatrixKind::Methylation,
                    Orientation::FeaturesBySamples,
                ),
                matrix(
                    crate::synth::COPY_NUMBER_FILE,
                    MatrixKind::CopyNumber,
                    Orientation::SamplesByFeatures,
                ),
            ],
            selection: crate::featsel::Thresholds {
                abs_log2fc_min: 0.5,
                ..Default::default()
            },
            autoencoder: Default::default(),
            gan: Default::default(),
            classifier: Default::default(),
        }
    }
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "referenced file does not exist: {}",
            path.display()
        )))
    }
}

pub(crate) fn hex_string(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
    }
    s
}
