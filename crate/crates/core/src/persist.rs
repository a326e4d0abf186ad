//! Versioned model persistence with integrity checking.
//!
//! A saved model bundles everything `score` needs to reproduce a training
//! run's preprocessing: the feature schema, the per-block PCA models, the
//! screened feature subset, and the fitted two-step model. The payload is
//! JSON wrapped in an envelope carrying a format version and an FNV-1a
//! checksum of the payload bytes.

use crate::dataset::FeatureSchema;
use crate::ensemble::TwoStepModel;
use crate::stats::PcaModel;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;
use thiserror::Error;

pub const FORMAT_VERSION: u32 = 1;

/// FNV-1a 64-bit. Used for model checksums and partition fingerprints;
/// collision resistance beyond accidental corruption is not a goal here.
#[derive(Debug, Clone)]
pub struct Fnv64 {
    state: u64,
}

impl Fnv64 {
    const OFFSET: u64 = 0xcbf29ce484222325;
    const PRIME: u64 = 0x100000001b3;

    pub fn new() -> Self {
        Fnv64 {
            state: Self::OFFSET,
        }
    }

    pub fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.state ^= b as u64;
            self.state = self.state.wrapping_mul(Self::PRIME);
        }
    }

    pub fn write_u64(&mut self, v: u64) {
        self.write(&v.to_le_bytes());
    }

    pub fn finish(&self) -> u64 {
        self.state
    }
}

impl Default for Fnv64 {
    fn default() -> Self {
        Self::new()
    }
}

pub fn checksum(bytes: &[u8]) -> u64 {
    let mut h = Fnv64::new();
    h.write(bytes);
    h.finish()
}

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("unsupported model format version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("model file checksum mismatch: stored {stored:016x}, computed {computed:016x}")]
    ChecksumMismatch { stored: u64, computed: u64 },
    #[error("model schema does not match the current feature schema")]
    SchemaMismatch,
    #[error("corrupt model file: {0}")]
    Corrupt(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Everything needed to score a new subject row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SavedModel {
    pub schema: FeatureSchema,
    /// Column indices (into the raw feature vector) retained by screening,
    /// or all indices when screening was not applied.
    pub selected_features: Vec<usize>,
    /// Per-block PCA models in block order, empty when PCA was not applied.
    pub pca_models: Vec<PcaModel>,
    pub model: TwoStepModel,
    /// Echo of the training configuration for provenance.
    pub config_echo: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    format_version: u32,
    payload_checksum: String,
    payload: String,
}

/// Writes atomically: temp file in the same directory, then rename.
pub fn save_model(model: &SavedModel, path: &Path) -> Result<(), PersistError> {
    let payload = serde_json::to_string(model).map_err(|e| PersistError::Corrupt(e.to_string()))?;
    let envelope = Envelope {
        format_version: FORMAT_VERSION,
        payload_checksum: format!("{:016x}", checksum(payload.as_bytes())),
        payload,
    };
    let bytes =
        serde_json::to_vec_pretty(&envelope).map_err(|e| PersistError::Corrupt(e.to_string()))?;
    atomic_write(path, &bytes)
}

pub fn load_model(path: &Path) -> Result<SavedModel, PersistError> {
    let bytes = fs::read(path)?;
    let envelope: Envelope =
        serde_json::from_slice(&bytes).map_err(|e| PersistError::Corrupt(e.to_string()))?;
    if envelope.format_version != FORMAT_VERSION {
        return Err(PersistError::VersionMismatch {
            found: envelope.format_version,
            expected: FORMAT_VERSION,
        });
    }
    let computed = checksum(envelope.payload.as_bytes());
    let stored = u64::from_str_radix(&envelope.payload_checksum, 16)
        .map_err(|e| PersistError::Corrupt(e.to_string()))?;
    if stored != computed {
        return Err(PersistError::ChecksumMismatch { stored, computed });
    }
    let model: SavedModel = serde_json::from_str(&envelope.payload)
        .map_err(|e| PersistError::Corrupt(e.to_string()))?;
    if model.schema != FeatureSchema::standard() {
        return Err(PersistError::SchemaMismatch);
    }
    Ok(model)
}

/// Write to `<path>.tmp` then rename, so readers never see a partial file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), PersistError> {
    let tmp = path.with_extension(match path.extension() {
        Some(ext) => format!("{}.tmp", ext.to_string_lossy()),
        None => "tmp".to_string(),
    });
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}
