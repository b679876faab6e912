//! Orchestration: configuration, checkpoint files, the run manifest, the
//! output-directory lock, and the six stages that make up a run.

pub mod artifact;
pub mod config;
pub mod lock;
pub mod manifest;
pub mod stages;

pub use artifact::{id_hash, load_artifact, load_artifact_hash, save_artifact, ARTIFACT_FORMAT_VERSION};
pub use config::{MatrixSpec, PipelineConfig};
pub use lock::{LockGuard, LOCK_FILE};
pub use manifest::{RunManifest, StageRecord, MANIFEST_FILE, STAGE_ORDER};
pub use stages::{
    files, run_pipeline, run_stage, stage_evaluate, stage_fuse, stage_oversample, stage_select,
    stage_train_ae, stage_train_clf, streams, verify_leakage, AlignedInputs, BalancedArtifact,
    FusedArtifact, GanArtifact, SplitArtifact,
};
