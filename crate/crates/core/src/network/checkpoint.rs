//! Binary checkpoint container.
//!
//! Layout: the magic bytes `PCDN`, a little-endian `u32` format version, a
//! little-endian `u64` manifest length, the JSON manifest, then every tensor as
//! little-endian `f64` values at the byte offsets listed in the manifest.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ArchitectureConfig, Direction, NetworkError, PcdNet};
use crate::autodiff::Tensor;
use crate::geometry::NormalizationTransform;

pub const MAGIC: &[u8; 4] = b"PCDN";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
    offset: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    direction: Direction,
    architecture: ArchitectureConfig,
    normalization: NormalizationTransform,
    tensors: Vec<TensorEntry>,
}

/// A trained network together with the prediction direction it serves.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub direction: Direction,
    pub model: PcdNet,
}

impl Checkpoint {
    pub fn new(direction: Direction, model: PcdNet) -> Self {
        Self { direction, model }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut offset = 0u64;
        let mut tensors = Vec::new();
        for (name, t) in self.model.parameter_names().iter().zip(self.model.parameters()) {
            tensors.push(TensorEntry {
                name: name.clone(),
                shape: t.shape().to_vec(),
                offset,
            });
            offset += 8 * t.numel() as u64;
        }
        let manifest = Manifest {
            direction: self.direction,
            architecture: self.model.config().clone(),
            normalization: *self.model.normalization(),
            tensors,
        };
        let text = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
        let mut out = Vec::with_capacity(16 + text.len() + offset as usize);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(text.len() as u64).to_le_bytes());
        out.extend_from_slice(&text);
        for t in self.model.parameters() {
            for v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, NetworkError> {
        let bad = |m: String| NetworkError::Checkpoint(m);
        if bytes.len() < 16 || &bytes[..4] != MAGIC {
            return Err(bad("missing PCDN magic".into()));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(bad(format!("unsupported format version {version}")));
        }
        let len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        let blob_start = 16usize
            .checked_add(len)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| bad("manifest length exceeds file size".into()))?;
        let manifest: Manifest = serde_json::from_slice(&bytes[16..blob_start])
            .map_err(|e| bad(format!("manifest: {e}")))?;
        let blob = &bytes[blob_start..];

        let mut named = Vec::with_capacity(manifest.tensors.len());
        let mut expected_offset = 0u64;
        for entry in manifest.tensors {
            let count: usize = entry.shape.iter().product();
            if entry.offset != expected_offset {
                return Err(bad(format!("tensor `{}` has a non-contiguous offset", entry.name)));
            }
            let start = entry.offset as usize;
            let end = start + 8 * count;
            if end > blob.len() {
                return Err(bad(format!("tensor `{}` runs past end of file", entry.name)));
            }
            let data = blob[start..end]
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            expected_offset = end as u64;
            named.push((entry.name, Tensor::new(entry.shape, data)?));
        }
        if expected_offset as usize != blob.len() {
            return Err(bad("trailing bytes after tensor blob".into()));
        }
        let model = PcdNet::from_parts(manifest.architecture, manifest.normalization, named)?;
        Ok(Self {
            direction: manifest.direction,
            model,
        })
    }

    /// Writes to a sibling temporary file, then renames over `path`.
    pub fn save_atomic(&self, path: &Path) -> Result<(), NetworkError> {
        let io = |e: std::io::Error| NetworkError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        };
        let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
        tmp_name.push(".tmp");
        let tmp = path.with_file_name(tmp_name);
        {
            let mut f = fs::File::create(&tmp).map_err(io)?;
            f.write_all(&self.to_bytes()).map_err(io)?;
            f.sync_all().map_err(io)?;
        }
        fs::rename(&tmp, path).map_err(io)
    }

    pub fn load(path: &Path) -> Result<Self, NetworkError> {
        let bytes = fs::read(path).map_err(|e| NetworkError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_bytes(&bytes)
    }
}
