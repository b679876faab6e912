//! Versioned on-disk checkpoints. Each stage writes its fitted state as a
//! JSON envelope carrying a format version, a kind tag, and the hash of the
//! training sample ids it was fitted on. Readers refuse envelopes whose
//! version or kind does not match, so stale or mixed-up files fail loudly
//! instead of producing silently wrong numbers.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::pipeline::config::hex_string;

pub const ARTIFACT_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    format_version: u32,
    kind: String,
    /// Hash of the sorted training sample ids the payload was fitted on.
    fitted_id_hash: String,
    payload: T,
}

/// Order-independent digest of a set of sample ids.
pub fn id_hash(ids: &[String]) -> String {
    let mut sorted: Vec<&str> = ids.iter().map(String::as_str).collect();
    sorted.sort_unstable();
    let mut hasher = Sha256::new();
    for id in sorted {
        hasher.update(id.as_bytes());
        hasher.update(b"\n");
    }
    hex_string(&hasher.finalize())
}

pub fn save_artifact<T: Serialize>(
    path: &Path,
    kind: &str,
    fitted_id_hash: &str,
    payload: &T,
) -> Result<()> {
    let envelope = Envelope {
        format_version: ARTIFACT_FORMAT_VERSION,
        kind: kind.to_string(),
        fitted_id_hash: fitted_id_hash.to_string(),
        payload,
    };
    let mut text = serde_json::to_string_pretty(&envelope)
        .map_err(|e| Error::Config(format!("artifact `{kind}` serialization failed: {e}")))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads a checkpoint, returning the payload and the recorded training-id
/// hash so callers can verify the leakage chain.
pub fn load_artifact<T: DeserializeOwned>(path: &Path, kind: &str) -> Result<(T, String)> {
    let text = std::fs::read_to_string(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::MissingArtifact {
                path: path.to_path_buf(),
            }
        } else {
            Error::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    })?;
    let envelope: Envelope<T> = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: artifact parse failed: {e}", path.display())))?;
    if envelope.format_version != ARTIFACT_FORMAT_VERSION {
        return Err(Error::ArtifactVersion {
            path: path.to_path_buf(),
            found: envelope.format_version,
            expected: ARTIFACT_FORMAT_VERSION,
        });
    }
    if envelope.kind != kind {
        return Err(Error::ArtifactKind {
            path: path.to_path_buf(),
            expected: kind.to_string(),
            found: envelope.kind,
        });
    }
    Ok((envelope.payload, envelope.fitted_id_hash))
}

/// Reads only the envelope header, ignoring the payload type. Used for
/// leakage verification across heterogeneous artifacts.
pub fn load_artifact_hash(path: &Path, kind: &str) -> Result<String> {
    let (_, hash) = load_artifact::<serde_json::Value>(path, kind)?;
    Ok(hash)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize, Deserialize, PartialEq, Debug)]
    struct Toy {
        weights: Vec<f64>,
    }

    #[test]
    fn round_trip_preserves_payload_and_hash() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("toy.json");
        let toy = Toy {
            weights: vec![0.1 + 0.2, 1.0 / 3.0, -7.25e-11],
        };
        save_artifact(&path, "toy", "abc123", &toy).unwrap();
        let (loaded, hash): (Toy, String) = load_artifact(&path, "toy").unwrap();
        assert_eq!(loaded, toy);
        assert_eq!(hash, "abc123");
    }

    #[test]
    fn kind_and_version_mismatches_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("toy.json");
        let toy = Toy { weights: vec![1.0] };
        save_artifact(&path, "toy", "h", &toy).unwrap();

        let err = load_artifact::<Toy>(&path, "other").unwrap_err();
        assert!(matches!(err, Error::ArtifactKind { .. }), "{err}");

        let tampered = std::fs::read_to_string(&path)
            .unwrap()
            .replace("\"format_version\": 1", "\"format_version\": 999");
        std::fs::write(&path, tampered).unwrap();
        let err = load_artifact::<Toy>(&path, "toy").unwrap_err();
        assert!(matches!(err, Error::ArtifactVersion { found: 999, .. }), "{err}");
    }

    #[test]
    fn missing_file_is_a_missing_artifact() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_artifact::<Toy>(&dir.path().join("nope.json"), "toy").unwrap_err();
        assert!(matches!(err, Error::MissingArtifact { .. }), "{err}");
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn id_hash_ignores_order_but_not_content() {
        let a = id_hash(&["s2".into(), "s1".into(), "s3".into()]);
        let b = id_hash(&["s1".into(), "s3".into(), "s2".into()]);
        let c = id_hash(&["s1".into(), "s3".into()]);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 64);
    }
}
