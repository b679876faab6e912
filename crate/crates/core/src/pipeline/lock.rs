//! Output-directory lock. Two runs writing the same directory would
//! interleave checkpoints, so the first process to create the lock file wins
//! and everyone else gets a configuration error.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const LOCK_FILE: &str = ".pipeline.lock";

/// Held for the duration of a run or a stage; the file is removed on drop.
/// If a previous process died without cleanup the stale file must be removed
/// by hand, which is the standard trade-off for a plain lock file.
#[derive(Debug)]
pub struct LockGuard {
    path: PathBuf,
}

impl LockGuard {
    pub fn acquire(output_dir: &Path) -> Result<LockGuard> {
        std::fs::create_dir_all(output_dir).map_err(|source| Error::Io {
            path: output_dir.to_path_buf(),
            source,
        })?;
        let path = output_dir.join(LOCK_FILE);
        let mut file = OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
            .map_err(|source| {
                if source.kind() == std::io::ErrorKind::AlreadyExists {
                    Error::LockHeld { path: path.clone() }
                } else {
                    Error::Io {
                        path: path.clone(),
                        source,
                    }
                }
            })?;
        let _ = writeln!(file, "{}", std::process::id());
        Ok(LockGuard { path })
    }
}

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_acquire_fails_until_first_is_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let guard = LockGuard::acquire(dir.path()).unwrap();
        let err = LockGuard::acquire(dir.path()).unwrap_err();
        assert!(matches!(err, Error::LockHeld { .. }), "{err}");
        assert_eq!(err.exit_code(), 2);

        drop(guard);
        assert!(!dir.path().join(LOCK_FILE).exists());
        LockGuard::acquire(dir.path()).unwrap();
    }

    #[test]
    fn acquire_creates_the_directory() {
        let dir = tempfile::tempdir().unwrap();
        let nested = dir.path().join("a/b");
        let _guard = LockGuard::acquire(&nested).unwrap();
        assert!(nested.join(LOCK_FILE).exists());
    }
}
