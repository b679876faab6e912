//! Seeded generator for the bundled synthetic benchmark: three feature
//! matrices over one imbalanced cohort, with a small planted set of
//! class-informative features per matrix.
//!
//! The files deliberately exercise the awkward corners of ingestion: one
//! matrix is written features-by-samples, one lists its samples in a
//! different order, the expression matrix carries scattered missing cells
//! plus one feature missing often enough to be dropped, and a few constant
//! and invalid-named features are planted.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{FeatureMatrix, MatrixKind};
use crate::matrix::Matrix;
use crate::rng::RngHandle;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub samples: usize,
    pub features_per_matrix: usize,
    pub informative_per_matrix: usize,
    /// Fraction of samples in the positive (minority) class.
    pub positive_fraction: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> SynthConfig {
        SynthConfig {
            samples: 300,
            features_per_matrix: 500,
            informative_per_matrix: 20,
            positive_fraction: 0.1,
            seed: 7,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples < 10 {
            return Err(Error::Config("samples must be at least 10".into()));
        }
        if self.informative_per_matrix + 5 > self.features_per_matrix {
            return Err(Error::Config(
                "features_per_matrix must exceed informative_per_matrix by at least 5 \
                 (room for the planted degenerate features)"
                    .into(),
            ));
        }
        let positives = (self.positive_fraction * self.samples as f64).round();
        if !(self.positive_fraction > 0.0 && self.positive_fraction < 1.0)
            || positives < 2.0
            || positives > self.samples as f64 - 2.0
        {
            return Err(Error::Config(format!(
                "positive_fraction {} leaves too few samples in one class",
                self.positive_fraction
            )));
        }
        Ok(())
    }
}

pub struct SynthDataset {
    pub expression: FeatureMatrix,
    pub methylation: FeatureMatrix,
    pub copy_number: FeatureMatrix,
    pub sample_ids: Vec<String>,
    /// Class name per sample, aligned with `sample_ids`; "case" is positive.
    pub class_names: Vec<&'static str>,
}

fn feature_names(tag: &str, count: usize) -> Vec<String> {
    (0..count).map(|i| format!("{tag}{i:04}")).collect()
}

/// Draws the cohort. The first `informative_per_matrix` features of each
/// matrix carry the class signal; the last four are a constant, a
/// near-constant, and (in expression only) two invalidly named features.
pub fn generate(config: &SynthConfig) -> Result<SynthDataset> {
    config.validate()?;
    let n = config.samples;
    let f = config.features_per_matrix;
    let k = config.informative_per_matrix;
    let mut rng = RngHandle::new(config.seed);

    let sample_ids: Vec<String> = (0..n).map(|i| format!("S{:04}", i + 1)).collect();
    let n_pos = (config.positive_fraction * n as f64).round() as usize;
    let positive_rows: Vec<usize> = rng.shuffled_indices(n).into_iter().take(n_pos).collect();
    let mut is_pos = vec![false; n];
    for &r in &positive_rows {
        is_pos[r] = true;
    }
    let class_names: Vec<&'static str> = is_pos
        .iter()
        .map(|&p| if p { "case" } else { "control" })
        .collect();

    // per-sample nuisance factor shared within each matrix, so features are
    // correlated and the autoencoders have structure to compress; the class
    // signal is painted over the first k columns afterwards
    let make = |rng: &mut RngHandle,
                base: &dyn Fn(&mut RngHandle) -> f64,
                noise: &dyn Fn(&mut RngHandle, f64, f64) -> f64,
                floor: Option<f64>|
     -> Matrix {
        let factors: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
        let bases: Vec<f64> = (0..f).map(|_| base(rng)).collect();
        let loadings: Vec<f64> = (0..f).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let mut m = Matrix::zeros(n, f);
        for (r, &factor) in factors.iter().enumerate() {
            for c in 0..f {
                let mut v = noise(rng, bases[c], loadings[c] * factor);
                if let Some(fl) = floor {
                    v = v.max(fl);
                }
                m.set(r, c, v);
            }
        }
        m
    };

    // planted degenerate features in the last two columns: an exact
    // constant and a column whose variance sits under any sane floor
    let plant = |m: &mut Matrix, rng: &mut RngHandle, constant: f64, near: f64| {
        for r in 0..m.rows() {
            m.set(r, f - 1, constant);
            m.set(r, f - 2, near + 1e-4 * rng.standard_normal());
        }
    };

    // expression: positive baseline; informative columns get a
    // multiplicative class shift a bit above a twofold change, with mean-one
    // lognormal noise so the class-mean ratio survives any noise level. A
    // per-sample severity factor correlates the informative set, keeping the
    // pooled signal moderate instead of growing with the feature count.
    let mut expression_values = make(
        &mut rng,
        &|rng| rng.uniform(2.0, 6.0),
        &|rng, v, fac| (v + 0.5 * fac + 0.35 * rng.standard_normal()).max(0.05),
        Some(0.05),
    );
    {
        let severity: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
        let bases: Vec<f64> = (0..k).map(|_| rng.uniform(1.5, 3.0)).collect();
        let mults: Vec<f64> = (0..k).map(|_| rng.uniform(2.05, 2.35)).collect();
        const SIGMA: f64 = 0.55;
        const SHARED: f64 = 0.8;
        let mix = (1.0 - SHARED * SHARED).sqrt();
        for r in 0..n {
            for c in 0..k {
                let center = if is_pos[r] { bases[c] * mults[c] } else { bases[c] };
                let z = SHARED * severity[r] + mix * rng.standard_normal();
                let v = center * (SIGMA * z - 0.5 * SIGMA * SIGMA).exp();
                expression_values.set(r, c, v);
            }
        }
    }
    plant(&mut expression_values, &mut rng, 1.0, 2.0);

    // methylation: beta-like values inside (0,1), additive class shift on
    // the informative columns with its own severity factor
    let mut methylation_values = make(
        &mut rng,
        &|rng| rng.uniform(0.15, 0.35),
        &|rng, v, fac| (v + 0.03 * fac + 0.04 * rng.standard_normal()).clamp(0.01, 0.99),
        None,
    );
    {
        let severity: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
        let bases: Vec<f64> = (0..k).map(|_| rng.uniform(0.15, 0.3)).collect();
        let shifts: Vec<f64> = (0..k).map(|_| rng.uniform(0.2, 0.3)).collect();
        for r in 0..n {
            for c in 0..k {
                let center = bases[c] + if is_pos[r] { shifts[c] } else { 0.0 };
                let v = center + 0.14 * severity[r] + 0.08 * rng.standard_normal();
                methylation_values.set(r, c, v.clamp(0.01, 0.99));
            }
        }
    }
    plant(&mut methylation_values, &mut rng, 0.5, 0.6);

    // copy number: centered near zero so class means can be nonpositive,
    // which exercises the fold-change bypass
    let mut copy_number_values = make(
        &mut rng,
        &|rng| rng.uniform(-0.2, 0.2),
        &|rng, v, fac| v + 0.25 * fac + 0.45 * rng.standard_normal(),
        None,
    );
    {
        let severity: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
        let bases: Vec<f64> = (0..k).map(|_| rng.uniform(-0.2, 0.2)).collect();
        let shifts: Vec<f64> = (0..k).map(|_| rng.uniform(0.6, 0.9)).collect();
        for r in 0..n {
            for c in 0..k {
                let center = bases[c] + if is_pos[r] { shifts[c] } else { 0.0 };
                let v = center + 0.45 * severity[r] + 0.3 * rng.standard_normal();
                copy_number_values.set(r, c, v);
            }
        }
    }
    plant(&mut copy_number_values, &mut rng, 0.0, -0.1);

    let mut expression_names = feature_names("GENE", f);
    // two invalidly named features (lowercase / leading digit) among the
    // uninformative tail, exercising symbol validation when enabled
    expression_names[f - 3] = "badgene".into();
    expression_names[f - 4] = "9XYZ".into();

    Ok(SynthDataset {
        expression: FeatureMatrix {
            kind: MatrixKind::Expression,
            sample_ids: sample_ids.clone(),
            feature_names: expression_names,
            values: expression_values,
        },
        methylation: FeatureMatrix {
            kind: MatrixKind::Methylation,
            sample_ids: sample_ids.clone(),
            feature_names: feature_names("CPG", f),
            values: methylation_values,
        },
        copy_number: FeatureMatrix {
            kind: MatrixKind::CopyNumber,
            sample_ids: sample_ids.clone(),
            feature_names: feature_names("CNV", f),
            values: copy_number_values,
        },
        sample_ids,
        class_names,
    })
}

/// File names written by [`write_dataset`], relative to its directory.
pub const EXPRESSION_FILE: &str = "expression.tsv";
pub const METHYLATION_FILE: &str = "methylation.tsv";
pub const COPY_NUMBER_FILE: &str = "copy_number.tsv";
pub const LABELS_FILE: &str = "labels.tsv";

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes the four TSV files. Expression goes out samples-by-features with
/// sprinkled missing cells (and one feature missing beyond the drop
/// threshold), methylation goes out transposed (features-by-samples), and
/// copy number lists its samples in reverse order.
pub fn write_dataset(dir: &Path, ds: &SynthDataset, seed: u64) -> Result<()> {
    let mut rng = RngHandle::new(seed).split(0xDA7A);
    let n = ds.sample_ids.len();
    let f = ds.expression.feature_names.len();

    // expression, samples by features, with missing cells
    let mut out = String::from("sample_id");
    for name in &ds.expression.feature_names {
        out.push('\t');
        out.push_str(name);
    }
    out.push('\n');
    // one feature goes missing in a third of the samples and must be
    // dropped at load time; other features get rare scattered holes
    let missing_heavy = f - 5;
    for r in 0..n {
        out.push_str(&ds.sample_ids[r]);
        for c in 0..f {
            let miss = (c == missing_heavy && r % 3 == 0)
                || (c != missing_heavy && rng.uniform01() < 0.002);
            if miss {
                out.push_str("\tNA");
            } else {
                let _ = write!(out, "\t{}", ds.expression.values.get(r, c));
            }
        }
        out.push('\n');
    }
    write_file(&dir.join(EXPRESSION_FILE), &out)?;

    // methylation, features by samples
    let mut out = String::from("feature_id");
    for id in &ds.sample_ids {
        out.push('\t');
        out.push_str(id);
    }
    out.push('\n');
    for c in 0..f {
        out.push_str(&ds.methylation.feature_names[c]);
        for r in 0..n {
            let _ = write!(out, "\t{}", ds.methylation.values.get(r, c));
        }
        out.push('\n');
    }
    write_file(&dir.join(METHYLATION_FILE), &out)?;

    // copy number, samples by features, rows in reverse cohort order
    let mut out = String::from("sample_id");
    for name in &ds.copy_number.feature_names {
        out.push('\t');
        out.push_str(name);
    }
    out.push('\n');
    for r in (0..n).rev() {
        out.push_str(&ds.sample_ids[r]);
        for c in 0..f {
            let _ = write!(out, "\t{}", ds.copy_number.values.get(r, c));
        }
        out.push('\n');
    }
    write_file(&dir.join(COPY_NUMBER_FILE), &out)?;

    let mut out = String::from("sample_id\tclass\n");
    for (id, class) in ds.sample_ids.iter().zip(&ds.class_names) {
        let _ = writeln!(out, "{id}\t{class}");
    }
    write_file(&dir.join(LABELS_FILE), &out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{load_labels, load_matrix, Orientation};

    #[test]
    fn cohort_has_the_requested_shape_and_imbalance() {
        let cfg = SynthConfig {
            samples: 60,
            features_per_matrix: 40,
            informative_per_matrix: 5,
            positive_fraction: 0.2,
            seed: 3,
        };
        let ds = generate(&cfg).unwrap();
        assert_eq!(ds.expression.n_samples(), 60);
        assert_eq!(ds.methylation.n_features(), 40);
        let cases = ds.class_names.iter().filter(|c| **c == "case").count();
        assert_eq!(cases, 12);
        assert!(ds.methylation.values.data().iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(ds.expression.values.data().iter().all(|&v| v > 0.0));
    }

    #[test]
    fn planted_features_separate_the_classes() {
        let cfg = SynthConfig {
            samples: 100,
            features_per_matrix: 30,
            informative_per_matrix: 4,
            positive_fraction: 0.3,
            seed: 11,
        };
        let ds = generate(&cfg).unwrap();
        let labels: Vec<u8> = ds.class_names.iter().map(|c| u8::from(*c == "case")).collect();
        for c in 0..4 {
            let col = ds.expression.values.column(c);
            let w = crate::featsel::welch_t_test(&col, &labels).unwrap();
            assert!(w.p_value < 1e-2, "expression feature {c} p={}", w.p_value);
            let fc = crate::featsel::log2_fold_change(&col, &labels)
                .unwrap()
                .unwrap();
            assert!(fc.abs() >= 0.5, "expression feature {c} fc={fc}");
        }
        // an uninformative column should look like noise
        let col = ds.expression.values.column(10);
        let w = crate::featsel::welch_t_test(&col, &labels).unwrap();
        assert!(w.p_value > 1e-4, "noise feature p={}", w.p_value);
    }

    #[test]
    fn same_seed_reproduces_the_cohort() {
        let cfg = SynthConfig::default();
        let small = SynthConfig {
            samples: 40,
            features_per_matrix: 20,
            informative_per_matrix: 3,
            ..cfg
        };
        let a = generate(&small).unwrap();
        let b = generate(&small).unwrap();
        assert_eq!(a.expression.values.data(), b.expression.values.data());
        assert_eq!(a.class_names, b.class_names);
    }

    #[test]
    fn written_files_load_back_through_ingestion() {
        let cfg = SynthConfig {
            samples: 50,
            features_per_matrix: 25,
            informative_per_matrix: 4,
            positive_fraction: 0.2,
            seed: 21,
        };
        let ds = generate(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_dataset(dir.path(), &ds, cfg.seed).unwrap();

        let expr = load_matrix(
            &dir.path().join(EXPRESSION_FILE),
            MatrixKind::Expression,
            Orientation::SamplesByFeatures,
        )
        .unwrap();
        // the heavily missing feature is gone, the rest survive
        assert_eq!(expr.n_features(), 24);
        assert!(!expr.feature_names.contains(&"GENE0020".to_string()));

        let meth = load_matrix(
            &dir.path().join(METHYLATION_FILE),
            MatrixKind::Methylation,
            Orientation::FeaturesBySamples,
        )
        .unwrap();
        assert_eq!(meth.n_samples(), 50);
        // transposed write round-trips the values exactly
        assert_eq!(meth.values.data(), ds.methylation.values.data());

        let cnv = load_matrix(
            &dir.path().join(COPY_NUMBER_FILE),
            MatrixKind::CopyNumber,
            Orientation::SamplesByFeatures,
        )
        .unwrap();
        assert_eq!(cnv.sample_ids[0], ds.sample_ids[49]);

        let labels = load_labels(&dir.path().join(LABELS_FILE), Some("case")).unwrap();
        assert_eq!(labels.positive_count(), 10);
        assert_eq!(labels.sample_ids.len(), 50);
    }

    #[test]
    fn config_validation_catches_impossible_requests() {
        let bad = SynthConfig {
            samples: 5,
            ..SynthConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SynthConfig {
            features_per_matrix: 20,
            informative_per_matrix: 18,
            ..SynthConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SynthConfig {
            positive_fraction: 0.001,
            ..SynthConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
