//! Content digests and the per-stage artifact manifest.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

fn hex(d: &[u8]) -> String {
    d.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_digest(path: &Path) -> std::io::Result<String> {
    let mut f = fs::File::open(path)?;
    let mut h = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex(&h.finalize()))
}

/// Digest of an ordered list of labelled parts.
pub fn combine(parts: &[(&str, String)]) -> String {
    let mut h = Sha256::new();
    for (k, v) in parts {
        h.update(k.as_bytes());
        h.update([0]);
        h.update(v.as_bytes());
        h.update([0xff]);
    }
    hex(&h.finalize())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputRecord {
    /// Relative to the artifact directory.
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub input_digest: String,
    pub outputs: Vec<OutputRecord>,
    #[serde(skip)]
    pub reused: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactManifest {
    pub version: u32,
    pub config: String,
    pub stages: Vec<StageRecord>,
}

impl ArtifactManifest {
    pub fn new(config: String) -> Self {
        Self {
            version: MANIFEST_VERSION,
            config,
            stages: Vec::new(),
        }
    }

    pub fn stage(&self, name: &str) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.name == name)
    }

    /// Digest recorded for `path`, if any stage produced it.
    pub fn digest_of(&self, path: &Path) -> Option<&str> {
        self.stages
            .iter()
            .flat_map(|s| &s.outputs)
            .find(|o| o.path == path)
            .map(|o| o.sha256.as_str())
    }

    pub fn executed(&self) -> Vec<&str> {
        self.stages.iter().filter(|s| !s.reused).map(|s| s.name.as_str()).collect()
    }

    /// Previous manifest in `dir`, or `None` when absent or unreadable.
    pub fn load(dir: &Path) -> Option<Self> {
        let text = fs::read_to_string(dir.join(MANIFEST_FILE)).ok()?;
        let m: Self = serde_json::from_str(&text).ok()?;
        (m.version == MANIFEST_VERSION).then_some(m)
    }

    pub fn save(&self, dir: &Path) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(dir.join(MANIFEST_FILE), text + "\n")
    }
}

/// True when `prev` recorded the same input digest and every output is
/// still on disk with its recorded content.
pub fn still_valid(prev: &StageRecord, input_digest: &str, dir: &Path) -> bool {
    prev.input_digest == input_digest
        && prev
            .outputs
            .iter()
            .all(|o| file_digest(&dir.join(&o.path)).is_ok_and(|d| d == o.sha256))
}
