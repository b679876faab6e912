//! Run manifest: which config produced this output directory, what each
//! stage consumed and produced, how long it took, and every file written.
//! Staged runs update the manifest incrementally; a fresh monolithic run
//! rebuilds it from scratch.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

/// Canonical stage order; manifests keep their records in this order no
/// matter how stages were invoked.
pub const STAGE_ORDER: [&str; 6] = [
    "select",
    "train-ae",
    "fuse",
    "oversample",
    "train-clf",
    "evaluate",
];

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct StageRecord {
    pub stage: String,
    pub rows_in: usize,
    pub cols_in: usize,
    pub rows_out: usize,
    pub cols_out: usize,
    pub wall_ms: u64,
    /// Files this stage wrote, relative to the output directory.
    pub files: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub config_hash: String,
    pub seed: u64,
    /// Hash of the training sample ids; the leakage reference every fitted
    /// checkpoint must match.
    pub train_id_hash: Option<String>,
    pub stages: Vec<StageRecord>,
    /// Union of all stage outputs plus this manifest, each exactly once.
    pub artifacts: Vec<String>,
}

impl RunManifest {
    pub fn new(config_hash: String, seed: u64) -> RunManifest {
        RunManifest {
            schema_version: MANIFEST_SCHEMA_VERSION,
            config_hash,
            seed,
            train_id_hash: None,
            stages: Vec::new(),
            artifacts: vec![MANIFEST_FILE.to_string()],
        }
    }

    /// Loads the manifest in `dir`, or starts a new one if none exists.
    /// A manifest written by a different config or seed is rejected rather
    /// than silently extended.
    pub fn load_or_new(dir: &Path, config_hash: &str, seed: u64) -> Result<RunManifest> {
        let path = dir.join(MANIFEST_FILE);
        if !path.exists() {
            return Ok(RunManifest::new(config_hash.to_string(), seed));
        }
        let text = std::fs::read_to_string(&path).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        let manifest: RunManifest = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: manifest parse failed: {e}", path.display())))?;
        if manifest.schema_version != MANIFEST_SCHEMA_VERSION {
            return Err(Error::ArtifactVersion {
                path,
                found: manifest.schema_version,
                expected: MANIFEST_SCHEMA_VERSION,
            });
        }
        if manifest.config_hash != config_hash || manifest.seed != seed {
            return Err(Error::Config(format!(
                "{} belongs to a different config or seed; use a fresh output directory",
                path.display()
            )));
        }
        Ok(manifest)
    }

    /// Inserts or replaces the record for its stage, keeping canonical order.
    pub fn upsert_stage(&mut self, record: StageRecord) {
        self.stages.retain(|s| s.stage != record.stage);
        self.stages.push(record);
        self.stages.sort_by_key(|s| {
            STAGE_ORDER
                .iter()
                .position(|name| *name == s.stage)
                .unwrap_or(STAGE_ORDER.len())
        });
        self.rebuild_artifact_list();
    }

    fn rebuild_artifact_list(&mut self) {
        let mut files: Vec<String> = self
            .stages
            .iter()
            .flat_map(|s| s.files.iter().cloned())
            .collect();
        files.push(MANIFEST_FILE.to_string());
        files.sort();
        files.dedup();
        self.artifacts = files;
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Config(format!("manifest serialization failed: {e}")))?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|source| Error::Io { path, source })
    }

    /// True when every listed file is unique; the invariant the artifact
    /// list is built to satisfy.
    pub fn artifacts_unique(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        self.artifacts.iter().all(|f| seen.insert(f))
    }
}
