//! Result cache keyed by a hash of the resolved configuration and the code
//! version.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::SweepConfig;
use crate::table::{write_atomic, ResultTable};

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Stored outcome of one completed run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub code_version: String,
    pub config_hash: String,
    pub table: ResultTable,
    pub derived: Value,
    pub convergence: Value,
}

/// Hash over everything that can change the numbers: the resolved config
/// without its output directory and thread count, plus the code version.
pub fn config_hash(cfg: &SweepConfig, code_version: &str) -> String {
    let mut key = cfg.clone();
    key.out = PathBuf::new();
    key.jobs = None;
    let text = serde_json::to_string(&key).expect("config serializes");
    let mut h = Sha256::new();
    h.update(code_version.as_bytes());
    h.update([0u8]);
    h.update(text.as_bytes());
    hex::encode(h.finalize())
}

fn entry_path(dir: &Path, hash: &str) -> PathBuf {
    dir.join(format!("{hash}.json"))
}

/// Prior result for `hash`, if one exists and was produced by
/// `code_version`. Unreadable entries are reported and treated as absent.
pub fn cache_lookup(dir: &Path, hash: &str, code_version: &str) -> Option<CacheEntry> {
    let path = entry_path(dir, hash);
    let bytes = fs::read(&path).ok()?;
    match serde_json::from_slice::<CacheEntry>(&bytes) {
        Ok(e) if e.config_hash == hash && e.code_version == code_version => Some(e),
        Ok(_) => None,
        Err(err) => {
            log::warn!("ignoring corrupt cache entry {}: {err}", path.display());
            None
        }
    }
}

pub fn cache_store(dir: &Path, entry: &CacheEntry) -> std::io::Result<()> {
    let bytes = serde_json::to_vec(entry).map_err(std::io::Error::other)?;
    write_atomic(&entry_path(dir, &entry.config_hash), &bytes)
}
