//! JSON manifest describing a generated benchmark: its source, every
//! corruption parameter and a content hash per stimulus.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grating::GratingSpec;
use crate::image::GrayImage;
use crate::interpolate::Kernel;

pub const MANIFEST_VERSION: u32 = 1;

/// SHA-256 over the image dimensions (two little-endian u32) followed by
/// the 8-bit quantized pixels.
pub fn content_hash(image: &GrayImage) -> String {
    let mut h = Sha256::new();
    h.update((image.width() as u32).to_le_bytes());
    h.update((image.height() as u32).to_le_bytes());
    h.update(image.to_u8());
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    /// `mnist`, `mnist-hires` or `silhouettes`.
    pub dataset: String,
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<String>,
    pub width: usize,
    pub height: usize,
    pub class_names: Vec<String>,
    pub figure_is_dark: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interpolation: Option<InterpolationRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subset: Option<SubsetRecord>,
    pub total_stimuli: usize,
    pub sets: Vec<ManifestSet>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolationRecord {
    pub kernel: Kernel,
    pub source_width: usize,
    pub source_height: usize,
}

/// Provenance of a sampled subset (human-study draws).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetRecord {
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disjoint_from_seed: Option<u64>,
    pub per_class: usize,
    /// Indices into the source dataset, in stimulus order.
    pub source_indices: Vec<usize>,
}

/// One condition: a (direction, interval) pair applied to the whole dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestSet {
    /// Relative directory of this set, `<dataset>/<direction>_<interval>`.
    pub path: String,
    pub spec: GratingSpec,
    pub items: Vec<ManifestItem>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestItem {
    pub index: usize,
    pub source_index: usize,
    pub label: usize,
    /// File name relative to the set directory.
    pub file: String,
    pub sha256: String,
}

impl Manifest {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Manifest = serde_json::from_str(text)?;
        if m.version != MANIFEST_VERSION {
            return Err(Error::format(format!(
                "manifest version {} unsupported (expected {MANIFEST_VERSION})",
                m.version
            )));
        }
        Ok(m)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn set_count(&self) -> usize {
        self.sets.len()
    }
}
