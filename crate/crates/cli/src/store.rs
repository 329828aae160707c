//! Results directories, atomic writes and run manifests.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Environment variable naming the results root.
pub const RESULTS_ENV: &str = "QUASIREST_RESULTS_DIR";
/// Append-only log of every manifest, kept in the results root.
pub const MANIFEST_LOG: &str = "manifests.jsonl";
pub const MANIFEST: &str = "manifest.json";

pub fn results_root() -> PathBuf {
    std::env::var_os(RESULTS_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("results"))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes `bytes` to a temporary sibling and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    {
        let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

/// Same records as comma-separated text and as JSON lines.
pub fn encode_table<T: Serialize>(records: &[T]) -> Result<(Vec<u8>, Vec<u8>)> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r)?;
    }
    let csv = w.into_inner().map_err(|e| anyhow::anyhow!("csv: {e}"))?;
    let mut jsonl = Vec::new();
    for r in records {
        serde_json::to_writer(&mut jsonl, r)?;
        jsonl.push(b'\n');
    }
    Ok((csv, jsonl))
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("{} line {}", path.display(), i + 1)))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub kind: String,
    pub name: String,
    pub config_file: String,
    pub config_sha256: String,
    pub spec_hash: String,
    pub timestamp: String,
    pub version: String,
    /// Seconds per stage.
    pub timings: BTreeMap<String, f64>,
    /// Paths relative to the run directory.
    pub outputs: Vec<String>,
    /// Plot-data files among `outputs`, regenerable by `render`.
    pub plots: Vec<String>,
    pub spec: serde_json::Value,
}

/// A fresh run directory under the results root.
pub struct RunDir {
    pub path: PathBuf,
    files: Vec<String>,
}

impl RunDir {
    pub fn create(name: &str, spec_hash: &str, stamp: &chrono::DateTime<chrono::Utc>) -> Result<Self> {
        let root = results_root();
        fs::create_dir_all(&root).with_context(|| format!("creating results root {}", root.display()))?;
        let base = format!("{name}-{}-{}", &spec_hash[..12.min(spec_hash.len())], stamp.format("%Y%m%dT%H%M%S"));
        let mut path = root.join(&base);
        let mut n = 1;
        // a directory belongs to exactly one manifest, so never reuse one
        while fs::create_dir(&path).is_err() {
            if n > 999 {
                anyhow::bail!("cannot create a run directory under {}", root.display());
            }
            path = root.join(format!("{base}-{n}"));
            n += 1;
        }
        Ok(RunDir { path, files: Vec::new() })
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.path.join(rel), bytes)?;
        self.files.push(rel.to_string());
        Ok(())
    }

    /// Writes `manifest.json` and appends it to the root log.
    pub fn finish(self, mut manifest: RunManifest) -> Result<PathBuf> {
        manifest.outputs = self.files;
        let text = serde_json::to_string_pretty(&manifest)?;
        write_atomic(&self.path.join(MANIFEST), text.as_bytes())?;
        let mut line = serde_json::to_vec(&serde_json::json!({
            "run_dir": self.path.file_name().and_then(|n| n.to_str()).unwrap_or_default(),
            "manifest": manifest,
        }))?;
        line.push(b'\n');
        let log = results_root().join(MANIFEST_LOG);
        let mut f = OpenOptions::new().create(true).append(true).open(&log).with_context(|| format!("opening {}", log.display()))?;
        f.write_all(&line)?;
        Ok(self.path)
    }
}

pub fn read_manifest(dir: &Path) -> Result<RunManifest> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}
