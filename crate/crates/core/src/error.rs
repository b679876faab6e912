use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Error taxonomy for the whole pipeline.
///
/// Variants map onto the process exit codes used by the CLI: configuration
/// and validation problems exit with 2, data problems with 3, and numeric
/// failures (non-finite values) with 4.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config: {0}")]
    Config(String),

    #[error("output directory is locked by another run (lock file {path})")]
    LockHeld { path: PathBuf },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}, line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate {what} `{name}`")]
    Duplicate { what: &'static str, name: String },

    #[error("{what} is empty")]
    EmptyInput { what: String },

    #[error("{op}: dimension mismatch, left is {left_rows}x{left_cols}, right is {right_rows}x{right_cols}")]
    DimMismatch {
        op: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },

    #[error("{context}: expected both classes present, found only one")]
    SingleClass { context: String },

    #[error("{context}: need at least {needed} samples, got {got}")]
    TooFewSamples {
        context: String,
        needed: usize,
        got: usize,
    },

    #[error("no features survived selection; {hint}")]
    NoSurvivors { hint: String },

    #[error("invalid label value `{value}`: {message}")]
    InvalidLabel { value: String, message: String },

    #[error("non-finite value produced by {op}")]
    NonFinite { op: String },

    #[error("{path}: artifact format version {found}, this build reads version {expected}")]
    ArtifactVersion {
        path: PathBuf,
        found: u32,
        expected: u32,
    },

    #[error("{path}: expected a `{expected}` artifact, found `{found}`")]
    ArtifactKind {
        path: PathBuf,
        expected: String,
        found: String,
    },

    #[error("missing artifact {path}; run the earlier stages first")]
    MissingArtifact { path: PathBuf },

    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Process exit code the CLI maps this error onto.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::LockHeld { .. } => 2,
            Error::NonFinite { .. } => 4,
            Error::Stage { source, .. } => source.exit_code(),
            _ => 3,
        }
    }

    /// Short machine-readable category, used in the final stderr record.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) | Error::LockHeld { .. } => "config",
            Error::NonFinite { .. } => "numeric",
            Error::Stage { source, .. } => source.kind(),
            _ => "data",
        }
    }

    /// Innermost stage name attached via [`Error::in_stage`], if any.
    pub fn stage(&self) -> Option<&'static str> {
        match self {
            Error::Stage { stage, source } => source.stage().or(Some(stage)),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_category() {
        assert_eq!(Error::Config("x".into()).exit_code(), 2);
        assert_eq!(
            Error::EmptyInput {
                what: "matrix".into()
            }
            .exit_code(),
            3
        );
        assert_eq!(Error::NonFinite { op: "mse".into() }.exit_code(), 4);
    }

    #[test]
    fn stage_wrapper_delegates() {
        let e = Error::NonFinite {
            op: "train".into(),
        }
        .in_stage("train-ae");
        assert_eq!(e.exit_code(), 4);
        assert_eq!(e.kind(), "numeric");
        assert_eq!(e.stage(), Some("train-ae"));
    }
}
