//! Append-only completion cache: one file per entry, named by the digest of
//! (model, temperature, prompt). Identical prompts dedupe across reruns and
//! strategies regardless of which query produced them.

use std::fs;
use std::path::PathBuf;
use std::sync::Mutex;

use sha2::{Digest, Sha256};

use crate::ClientError;

#[derive(Debug)]
pub struct ScoreCache {
    dir: PathBuf,
    // Writes serialized; reads go straight to the filesystem.
    write_lock: Mutex<()>,
}

impl ScoreCache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, ClientError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)
            .map_err(|e| ClientError::Cache(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self {
            dir,
            write_lock: Mutex::new(()),
        })
    }

    /// Content digest of one completion request.
    pub fn key(model_name: &str, temperature: f64, prompt: &str) -> String {
        let mut hasher = Sha256::new();
        hasher.update(model_name.as_bytes());
        hasher.update([0x1f]);
        hasher.update(temperature.to_le_bytes());
        hasher.update([0x1f]);
        hasher.update(prompt.as_bytes());
        hex::encode(hasher.finalize())
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.txt"))
    }

    pub fn get(&self, key: &str) -> Option<String> {
        fs::read_to_string(self.path(key)).ok()
    }

    pub fn put(&self, key: &str, value: &str) -> Result<(), ClientError> {
        let _guard = self.write_lock.lock().unwrap();
        let path = self.path(key);
        if path.exists() {
            return Ok(());
        }
        let tmp = self.dir.join(format!("{key}.tmp"));
        fs::write(&tmp, value).map_err(|e| ClientError::Cache(e.to_string()))?;
        fs::rename(&tmp, &path).map_err(|e| ClientError::Cache(e.to_string()))?;
        Ok(())
    }
}
