//! Versioned text container for named parameter tensors.
//!
//! Layout (stable across releases): a single JSON document with
//!
//! ```json
//! {
//!   "format": "teamgrad-checkpoint",
//!   "version": 1,
//!   "entries": { "<name>": { "shape": [..], "data": [..] }, ... }
//! }
//! ```
//!
//! Entries are kept in a `BTreeMap`, so serialization order is deterministic
//! and byte-identical for identical contents. Values are `f64` and round-trip
//! exactly through JSON (shortest-representation printing). Non-finite values
//! are rejected at insertion since JSON cannot carry them.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tensor::Tensor;

pub const CHECKPOINT_FORMAT: &str = "teamgrad-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed checkpoint: {0}")]
    Json(#[from] serde_json::Error),

    #[error("unknown container format {found:?} (expected {CHECKPOINT_FORMAT:?})")]
    FormatMismatch { found: String },

    #[error("unsupported checkpoint version {found} (supported: {CHECKPOINT_VERSION})")]
    VersionUnsupported { found: u32 },

    #[error("entry {name:?} is missing")]
    MissingEntry { name: String },

    #[error("entry {name:?} has shape {found:?}, expected {expected:?}")]
    ShapeMismatch {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("entry {name:?} contains non-finite values")]
    NonFinite { name: String },

    #[error("entry {name:?} is corrupt: {reason}")]
    Corrupt { name: String, reason: String },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CheckpointEntry {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub entries: BTreeMap<String, CheckpointEntry>,
}

impl Default for Checkpoint {
    fn default() -> Self {
        Self::new()
    }
}

impl Checkpoint {
    pub fn new() -> Self {
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            entries: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, name: &str, tensor: &Tensor) -> Result<(), CheckpointError> {
        if !tensor.is_finite() {
            return Err(CheckpointError::NonFinite {
                name: name.to_string(),
            });
        }
        self.entries.insert(
            name.to_string(),
            CheckpointEntry {
                shape: tensor.shape().to_vec(),
                data: tensor.data().to_vec(),
            },
        );
        Ok(())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|s| s.as_str())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn tensor(&self, name: &str) -> Result<Tensor, CheckpointError> {
        let entry = self
            .entries
            .get(name)
            .ok_or_else(|| CheckpointError::MissingEntry {
                name: name.to_string(),
            })?;
        Tensor::new(entry.shape.clone(), entry.data.clone()).map_err(|e| {
            CheckpointError::Corrupt {
                name: name.to_string(),
                reason: e.to_string(),
            }
        })
    }

    /// Fetches an entry and rejects it unless the stored shape matches,
    /// naming the offending entry.
    pub fn tensor_with_shape(
        &self,
        name: &str,
        expected: &[usize],
    ) -> Result<Tensor, CheckpointError> {
        let t = self.tensor(name)?;
        if t.shape() != expected {
            return Err(CheckpointError::ShapeMismatch {
                name: name.to_string(),
                expected: expected.to_vec(),
                found: t.shape().to_vec(),
            });
        }
        Ok(t)
    }

    pub fn to_json(&self) -> Result<String, CheckpointError> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, CheckpointError> {
        let ckpt: Checkpoint = serde_json::from_str(text)?;
        if ckpt.format != CHECKPOINT_FORMAT {
            return Err(CheckpointError::FormatMismatch { found: ckpt.format });
        }
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(CheckpointError::VersionUnsupported {
                found: ckpt.version,
            });
        }
        Ok(ckpt)
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let text = self.to_json()?;
        fs::write(path, text).map_err(|source| CheckpointError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        let text = fs::read_to_string(path).map_err(|source| CheckpointError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_exact() {
        let mut ckpt = Checkpoint::new();
        let t = Tensor::matrix(2, 2, vec![0.1, -1.0 / 3.0, 2.0f64.sqrt(), 1e-300]).unwrap();
        ckpt.insert("layer0/query", &t).unwrap();
        let text = ckpt.to_json().unwrap();
        let back = Checkpoint::from_json(&text).unwrap();
        let restored = back.tensor("layer0/query").unwrap();
        assert_eq!(restored.data(), t.data());
        assert_eq!(restored.shape(), t.shape());
    }

    #[test]
    fn version_and_format_are_checked() {
        let mut ckpt = Checkpoint::new();
        ckpt.insert("w", &Tensor::scalar(1.0)).unwrap();
        let mut doc: serde_json::Value = serde_json::from_str(&ckpt.to_json().unwrap()).unwrap();
        doc["version"] = serde_json::json!(99);
        let err = Checkpoint::from_json(&doc.to_string()).unwrap_err();
        assert!(matches!(err, CheckpointError::VersionUnsupported { found: 99 }));

        doc["version"] = serde_json::json!(1);
        doc["format"] = serde_json::json!("other");
        let err = Checkpoint::from_json(&doc.to_string()).unwrap_err();
        assert!(matches!(err, CheckpointError::FormatMismatch { .. }));
    }

    #[test]
    fn shape_mismatch_names_the_entry() {
        let mut ckpt = Checkpoint::new();
        ckpt.insert("w", &Tensor::matrix(2, 3, vec![0.0; 6]).unwrap())
            .unwrap();
        let err = ckpt.tensor_with_shape("w", &[3, 2]).unwrap_err();
        match err {
            CheckpointError::ShapeMismatch { name, expected, found } => {
                assert_eq!(name, "w");
                assert_eq!(expected, vec![3, 2]);
                assert_eq!(found, vec![2, 3]);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn non_finite_rejected() {
        let mut ckpt = Checkpoint::new();
        let err = ckpt.insert("w", &Tensor::scalar(f64::NAN)).unwrap_err();
        assert!(matches!(err, CheckpointError::NonFinite { .. }));
    }

    #[test]
    fn serialization_is_deterministic() {
        let build = || {
            let mut c = Checkpoint::new();
            c.insert("b", &Tensor::vector(vec![2.0, 3.0])).unwrap();
            c.insert("a", &Tensor::scalar(1.0)).unwrap();
            c.to_json().unwrap()
        };
        assert_eq!(build(), build());
    }
}
