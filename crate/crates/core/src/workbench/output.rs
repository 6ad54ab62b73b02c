//! Output sets: files are staged in memory, written to a sibling staging
//! directory with the manifest, and renamed into place in one step.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::rng::{LATTICE_RNG_ALGORITHM, STREAM_RNG_ALGORITHM};
use crate::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_digest(path: &Path) -> Result<FileDigest> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(FileDigest {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
        bytes: bytes.len() as u64,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RngInfo {
    pub lattice: String,
    pub stream: String,
}

impl Default for RngInfo {
    fn default() -> Self {
        Self {
            lattice: LATTICE_RNG_ALGORITHM.into(),
            stream: STREAM_RNG_ALGORITHM.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub pipeline: String,
    /// sha256 of the resolved configuration serialized as JSON.
    pub config_sha256: String,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub rng: RngInfo,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    /// Wall-clock seconds; the only field that varies between reruns.
    pub elapsed_s: f64,
}

impl RunManifest {
    pub fn new(pipeline: &str, config: serde_json::Value, seeds: Vec<u64>) -> Self {
        let canon = serde_json::to_vec(&config).expect("json value serializes");
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            pipeline: pipeline.into(),
            config_sha256: sha256_hex(&canon),
            config,
            seeds,
            rng: RngInfo::default(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            elapsed_s: 0.0,
        }
    }
}

#[derive(Debug, Default)]
pub struct OutputSet {
    files: BTreeMap<String, Vec<u8>>,
}

impl OutputSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: &str, body: impl Into<Vec<u8>>) {
        self.files.insert(name.to_string(), body.into());
    }

    pub fn add_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Numerical(e.to_string()))?;
        s.push('\n');
        self.add(name, s);
        Ok(())
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.files.keys()
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.get(name).map(Vec::as_slice)
    }

    /// Writes everything plus the manifest into `target`, replacing any
    /// previous contents only once all files are on disk.
    pub fn commit(self, target: &Path, mut manifest: RunManifest) -> Result<RunManifest> {
        let parent = target.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        let name = target
            .file_name()
            .ok_or_else(|| Error::validation(format!("output path {} has no final component", target.display())))?
            .to_string_lossy()
            .to_string();
        let staging = parent.join(format!(".{name}.staging-{}", std::process::id()));
        let result = (|| {
            if staging.exists() {
                fs::remove_dir_all(&staging).map_err(|e| Error::io(&staging, e))?;
            }
            fs::create_dir(&staging).map_err(|e| Error::io(&staging, e))?;
            manifest.outputs.clear();
            for (n, body) in &self.files {
                let p = staging.join(n);
                fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
                manifest.outputs.push(FileDigest {
                    path: n.clone(),
                    sha256: sha256_hex(body),
                    bytes: body.len() as u64,
                });
            }
            let mp = staging.join(MANIFEST_FILE);
            let mut m = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Numerical(e.to_string()))?;
            m.push('\n');
            fs::write(&mp, m).map_err(|e| Error::io(&mp, e))?;
            replace_dir(&staging, target)
        })();
        if result.is_err() {
            let _ = fs::remove_dir_all(&staging);
        }
        result.map(|_| manifest)
    }
}

fn replace_dir(staging: &Path, target: &Path) -> Result<()> {
    let old: Option<PathBuf> = if target.exists() {
        let o = target.with_extension(format!("old-{}", std::process::id()));
        fs::rename(target, &o).map_err(|e| Error::io(target, e))?;
        Some(o)
    } else {
        None
    };
    if let Err(e) = fs::rename(staging, target) {
        if let Some(o) = &old {
            let _ = fs::rename(o, target);
        }
        return Err(Error::io(target, e));
    }
    if let Some(o) = old {
        fs::remove_dir_all(&o).map_err(|e| Error::io(&o, e))?;
    }
    Ok(())
}
