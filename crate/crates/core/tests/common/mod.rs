#![allow(dead_code)]

use std::path::{Path, PathBuf};

use omicfuse::featsel::Thresholds;
use omicfuse::gan::GanConfig;
use omicfuse::ingest::{MatrixKind, Orientation};
use omicfuse::pipeline::{MatrixSpec, PipelineConfig};
use omicfuse::synth::{
    self, SynthConfig, COPY_NUMBER_FILE, EXPRESSION_FILE, LABELS_FILE, METHYLATION_FILE,
};

/// Writes a small synthetic cohort for fast pipeline tests.
pub fn write_small_dataset(dir: &Path) {
    let cfg = SynthConfig {
        samples: 80,
        features_per_matrix: 60,
        informative_per_matrix: 8,
        positive_fraction: 0.2,
        seed: 5,
    };
    let ds = synth::generate(&cfg).expect("generate small cohort");
    std::fs::create_dir_all(dir).expect("create data dir");
    synth::write_dataset(dir, &ds, cfg.seed).expect("write small cohort");
}

/// Writes the full bundled benchmark cohort (300 samples, 500 features per
/// matrix, 20 informative, 9:1 imbalance).
pub fn write_benchmark_dataset(dir: &Path) {
    let cfg = SynthConfig::default();
    let ds = synth::generate(&cfg).expect("generate benchmark cohort");
    std::fs::create_dir_all(dir).expect("create data dir");
    synth::write_dataset(dir, &ds, cfg.seed).expect("write benchmark cohort");
}

fn matrices(data_dir: &Path, latent_dim: usize) -> Vec<MatrixSpec> {
    vec![
        MatrixSpec {
            path: data_dir.join(EXPRESSION_FILE),
            kind: MatrixKind::Expression,
            orientation: Orientation::SamplesByFeatures,
            latent_dim: Some(latent_dim),
            validate_symbols: false,
        },
        MatrixSpec {
            path: data_dir.join(METHYLATION_FILE),
            kind: MatrixKind::Methylation,
            orientation: Orientation::FeaturesBySamples,
            latent_dim: Some(latent_dim),
            validate_symbols: false,
        },
        MatrixSpec {
            path: data_dir.join(COPY_NUMBER_FILE),
            kind: MatrixKind::CopyNumber,
            orientation: Orientation::SamplesByFeatures,
            latent_dim: Some(latent_dim),
            validate_symbols: false,
        },
    ]
}

/// Config for the small cohort with trimmed training budgets; quality does
/// not matter for plumbing tests, only determinism and artifact flow.
pub fn small_config(data_dir: &Path, out_dir: PathBuf, seed: u64, oversample: bool) -> PipelineConfig {
    PipelineConfig {
        seed,
        output_dir: out_dir,
        split_fraction: 0.8,
        labels: data_dir.join(LABELS_FILE),
        positive_class: Some("case".into()),
        gene_list: None,
        oversample,
        matrices: matrices(data_dir, 4),
        selection: Thresholds {
            abs_log2fc_min: 0.5,
            fdr_q: 0.05,
            ..Thresholds::default()
        },
        autoencoder: omicfuse::autoencoder::AeConfig {
            latent_dim: 4,
            epochs: 30,
            ..Default::default()
        },
        gan: GanConfig {
            steps: 300,
            hidden_dim: 32,
            noise_dim: 8,
            ..Default::default()
        },
        classifier: Default::default(),
    }
}

/// Config for the benchmark cohort, the one the efficacy gate runs with:
/// the canonical template with absolute paths filled in.
pub fn benchmark_config(
    data_dir: &Path,
    out_dir: PathBuf,
    seed: u64,
    oversample: bool,
) -> PipelineConfig {
    let mut config = PipelineConfig::synthetic_benchmark();
    config.seed = seed;
    config.output_dir = out_dir;
    config.oversample = oversample;
    config.labels = data_dir.join(LABELS_FILE);
    for m in &mut config.matrices {
        m.path = data_dir.join(m.path.file_name().unwrap());
    }
    config
}

/// Byte comparison of two run directories over the files named in `names`.
pub fn assert_same_bytes(dir_a: &Path, dir_b: &Path, names: &[String]) {
    for name in names {
        if name == "manifest.json" {
            continue; // wall-clock times differ by construction
        }
        let a = std::fs::read(dir_a.join(name)).unwrap_or_else(|e| panic!("{name} in a: {e}"));
        let b = std::fs::read(dir_b.join(name)).unwrap_or_else(|e| panic!("{name} in b: {e}"));
        assert!(a == b, "{name} differs between {dir_a:?} and {dir_b:?}");
    }
}
