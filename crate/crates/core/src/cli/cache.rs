//! Content-addressed store of command artifacts, keyed by a hash of everything the
//! command reads. Entries carry a digest of their payload; a mismatch is reported as
//! `CacheCorrupt` and the caller recomputes.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Files written by one command, plus its terminal summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub files: BTreeMap<String, String>,
    pub summary: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct Entry {
    key: String,
    digest: String,
    artifact: Artifact,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

fn digest(a: &Artifact) -> String {
    sha256_hex(serde_json::to_string(a).expect("artifact serializes").as_bytes())
}

pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    /// `Ok(None)` on a miss.
    pub fn load(&self, key: &str) -> Result<Option<Artifact>> {
        let path = self.path(key);
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(Error::CacheCorrupt(format!("{}: {e}", path.display()))),
        };
        let entry: Entry =
            serde_json::from_str(&text).map_err(|e| Error::CacheCorrupt(format!("{}: {e}", path.display())))?;
        if entry.key != key || entry.digest != digest(&entry.artifact) {
            return Err(Error::CacheCorrupt(format!("{}: digest mismatch", path.display())));
        }
        Ok(Some(entry.artifact))
    }

    pub fn store(&self, key: &str, artifact: &Artifact) -> Result<()> {
        std::fs::create_dir_all(&self.dir)?;
        let entry = Entry { key: key.to_string(), digest: digest(artifact), artifact: artifact.clone() };
        let text = serde_json::to_string(&entry).map_err(|e| Error::Io(e.to_string()))?;
        let tmp = self.dir.join(format!("{key}.tmp"));
        std::fs::write(&tmp, text)?;
        std::fs::rename(&tmp, self.path(key))?;
        Ok(())
    }
}

/// Writes every artifact file under `dir`.
pub fn write_files(dir: &Path, artifact: &Artifact) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, content) in &artifact.files {
        std::fs::write(dir.join(name), content)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Artifact {
        let mut files = BTreeMap::new();
        files.insert("a.csv".to_string(), "x,y\n1,2\n".to_string());
        Artifact { files, summary: "ok".into() }
    }

    #[test]
    fn store_then_load() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path());
        assert_eq!(cache.load("k").unwrap(), None);
        cache.store("k", &sample()).unwrap();
        assert_eq!(cache.load("k").unwrap(), Some(sample()));
    }

    #[test]
    fn tampered_entry_is_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path());
        cache.store("k", &sample()).unwrap();
        let text = std::fs::read_to_string(cache.path("k")).unwrap().replace("1,2", "1,3");
        std::fs::write(cache.path("k"), text).unwrap();
        assert!(matches!(cache.load("k"), Err(Error::CacheCorrupt(_))));
        std::fs::write(cache.path("k"), "garbage").unwrap();
        assert!(matches!(cache.load("k"), Err(Error::CacheCorrupt(_))));
    }
}
