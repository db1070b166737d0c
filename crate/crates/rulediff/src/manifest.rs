//! Run manifest: the inputs and outputs of each pipeline stage with their
//! SHA-256 digests.
//!
//! Under `--strict`, a stage refuses to start when one of its inputs was
//! produced by an earlier stage and has changed since, and fails when a rerun
//! with identical inputs and parameters produces different outputs.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::formats::{self, FormatError};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub inputs: BTreeMap<String, FileDigest>,
    pub outputs: BTreeMap<String, FileDigest>,
    #[serde(default)]
    pub params: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: u32,
    pub stages: BTreeMap<String, StageRecord>,
}

impl Default for RunManifest {
    fn default() -> Self {
        Self {
            version: MANIFEST_VERSION,
            stages: BTreeMap::new(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(
        "stale input {path}: stage {producer} recorded sha256 {recorded}, file now has {actual}"
    )]
    Stale {
        path: String,
        producer: String,
        recorded: String,
        actual: String,
    },
    #[error("stage {stage} is not reproducible: output {role} ({path}) changed from {recorded} to {actual}")]
    NotReproducible {
        stage: String,
        role: String,
        path: String,
        recorded: String,
        actual: String,
    },
    #[error("unsupported manifest version {0}")]
    Version(u32),
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn digest_file(path: &Path) -> Result<FileDigest, FormatError> {
    let bytes = std::fs::read(path).map_err(|source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(FileDigest {
        path: normalize(&path.to_string_lossy()),
        sha256: sha256_hex(&bytes),
    })
}

fn normalize(path: &str) -> String {
    path.trim_start_matches("./").to_string()
}

impl RunManifest {
    /// Loads a manifest; a missing file is an empty manifest.
    pub fn load(path: &Path) -> Result<Self, ManifestError> {
        if !path.exists() {
            return Ok(Self::default());
        }
        let m: Self = formats::read_json(path)?;
        if m.version != MANIFEST_VERSION {
            return Err(ManifestError::Version(m.version));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<(), FormatError> {
        formats::write_json(path, self)
    }

    /// Checks current input digests against outputs recorded by other stages.
    pub fn check_inputs(
        &self,
        stage: &str,
        inputs: &BTreeMap<String, FileDigest>,
    ) -> Result<(), ManifestError> {
        for input in inputs.values() {
            for (producer, record) in self
                .stages
                .iter()
                .filter(|(name, _)| name.as_str() != stage)
            {
                if let Some(out) = record.outputs.values().find(|o| o.path == input.path) {
                    if out.sha256 != input.sha256 {
                        return Err(ManifestError::Stale {
                            path: input.path.clone(),
                            producer: producer.clone(),
                            recorded: out.sha256.clone(),
                            actual: input.sha256.clone(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Stores a stage record. With `strict`, a previous record with the same
    /// inputs and parameters must have the same outputs.
    pub fn record(
        &mut self,
        stage: &str,
        record: StageRecord,
        strict: bool,
    ) -> Result<(), ManifestError> {
        if strict {
            if let Some(prev) = self.stages.get(stage) {
                if prev.inputs == record.inputs && prev.params == record.params {
                    for (role, out) in &record.outputs {
                        if let Some(old) = prev.outputs.get(role) {
                            if old.sha256 != out.sha256 {
                                return Err(ManifestError::NotReproducible {
                                    stage: stage.to_string(),
                                    role: role.clone(),
                                    path: out.path.clone(),
                                    recorded: old.sha256.clone(),
                                    actual: out.sha256.clone(),
                                });
                            }
                        }
                    }
                }
            }
        }
        self.stages.insert(stage.to_string(), record);
        Ok(())
    }
}
