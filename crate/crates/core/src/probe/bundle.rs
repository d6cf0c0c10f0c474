//! Framework-neutral stem weights: a `weights.json` manifest naming each
//! tensor's shape and byte offset into a little-endian f32 `weights.bin`.
//!
//! ```json
//! {
//!   "source_model": "resnet50",
//!   "blob": "weights.bin",
//!   "tensors": [
//!     {"name": "conv_weights", "shape": [64, 3, 7, 7], "dtype": "f32", "offset": 0},
//!     {"name": "bn_gamma", "shape": [64], "dtype": "f32", "offset": 37632},
//!     ...
//!   ]
//! }
//! ```
//!
//! PyTorch state-dict names (`conv1.weight`, `bn1.weight`, `bn1.bias`,
//! `bn1.running_mean`, `bn1.running_var`) are accepted as aliases.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::Tensor;

/// Per-channel inference parameters of a batch-norm layer.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    pub gamma: Vec<f32>,
    pub beta: Vec<f32>,
    pub mean: Vec<f32>,
    pub var: Vec<f32>,
}

impl BatchNorm {
    pub fn new(gamma: Vec<f32>, beta: Vec<f32>, mean: Vec<f32>, var: Vec<f32>) -> Self {
        Self { gamma, beta, mean, var }
    }

    pub fn identity(channels: usize) -> Self {
        Self::new(vec![1.0; channels], vec![0.0; channels], vec![0.0; channels], vec![1.0; channels])
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.gamma.len();
        if self.beta.len() != c || self.mean.len() != c || self.var.len() != c {
            return Err(Error::Shape(format!(
                "batch norm vectors disagree: gamma {c}, beta {}, mean {}, var {}",
                self.beta.len(),
                self.mean.len(),
                self.var.len()
            )));
        }
        if let Some((i, v)) = self.var.iter().enumerate().find(|(_, v)| v.is_nan() || **v < 0.0) {
            return Err(Error::param(format!("variance of channel {i} is {v}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightBundle {
    pub conv_weights: Tensor,
    pub bn: BatchNorm,
    pub source_model: String,
}

impl WeightBundle {
    pub fn new(conv_weights: Tensor, bn: BatchNorm, source_model: impl Into<String>) -> Result<Self> {
        let b = Self {
            conv_weights,
            bn,
            source_model: source_model.into(),
        };
        b.validate()?;
        Ok(b)
    }

    pub fn out_channels(&self) -> usize {
        self.conv_weights.shape()[0]
    }

    pub fn in_channels(&self) -> usize {
        self.conv_weights.shape()[1]
    }

    pub fn validate(&self) -> Result<()> {
        if self.conv_weights.rank() != 4 {
            return Err(Error::Shape(format!(
                "conv weights must be rank 4, got {:?}",
                self.conv_weights.shape()
            )));
        }
        self.bn.validate()?;
        if self.bn.channels() != self.out_channels() {
            return Err(Error::Shape(format!(
                "conv has {} output channels, batch norm has {}",
                self.out_channels(),
                self.bn.channels()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleManifest {
    pub source_model: String,
    #[serde(default = "default_blob")]
    pub blob: String,
    pub tensors: Vec<TensorEntry>,
}

fn default_blob() -> String {
    "weights.bin".to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub dtype: String,
    /// Byte offset into the blob.
    pub offset: usize,
}

const NAMES: [(&str, &str); 5] = [
    ("conv_weights", "conv1.weight"),
    ("bn_gamma", "bn1.weight"),
    ("bn_beta", "bn1.bias"),
    ("bn_mean", "bn1.running_mean"),
    ("bn_var", "bn1.running_var"),
];

fn canonical(name: &str) -> Option<usize> {
    NAMES.iter().position(|(a, b)| *a == name || *b == name)
}

/// Parses a manifest and its blob into a bundle, checking every offset and
/// length against the blob and every bundle invariant.
pub fn load_weight_bundle(manifest_json: &str, blob: &[u8]) -> Result<WeightBundle> {
    let manifest: BundleManifest = serde_json::from_str(manifest_json)?;
    let mut slots: [Option<Tensor>; 5] = Default::default();
    let mut extents = Vec::new();
    for entry in &manifest.tensors {
        if !matches!(entry.dtype.as_str(), "f32" | "float32") {
            return Err(Error::format(format!("{}: unsupported dtype `{}`", entry.name, entry.dtype)));
        }
        let Some(slot) = canonical(&entry.name) else {
            continue;
        };
        let count: usize = entry.shape.iter().product();
        let end = entry
            .offset
            .checked_add(count * 4)
            .ok_or_else(|| Error::format(format!("{}: offset overflows", entry.name)))?;
        let bytes = blob.get(entry.offset..end).ok_or_else(|| {
            Error::format(format!(
                "{}: bytes {}..{end} outside blob of {} bytes",
                entry.name,
                entry.offset,
                blob.len()
            ))
        })?;
        let values = bytes
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().expect("4-byte chunk")))
            .collect();
        if slots[slot].is_some() {
            return Err(Error::format(format!("tensor `{}` listed twice", NAMES[slot].0)));
        }
        slots[slot] = Some(Tensor::new(entry.shape.clone(), values)?);
        extents.push((entry.offset, end, entry.name.as_str()));
    }
    extents.sort();
    for pair in extents.windows(2) {
        if pair[1].0 < pair[0].1 {
            return Err(Error::format(format!("tensors `{}` and `{}` overlap", pair[0].2, pair[1].2)));
        }
    }
    let used = extents.iter().map(|e| e.1).max().unwrap_or(0);
    if used != blob.len() {
        return Err(Error::format(format!(
            "blob holds {} bytes but the manifest accounts for {used}",
            blob.len()
        )));
    }
    let [conv, gamma, beta, mean, var] = slots;
    let take = |t: Option<Tensor>, i: usize| {
        t.ok_or_else(|| Error::format(format!("manifest lacks tensor `{}`", NAMES[i].0)))
    };
    let vector = |t: Tensor, i: usize| -> Result<Vec<f32>> {
        if t.rank() != 1 {
            return Err(Error::Shape(format!("`{}` must be rank 1, got {:?}", NAMES[i].0, t.shape())));
        }
        Ok(t.data().to_vec())
    };
    let conv = take(conv, 0)?;
    let bn = BatchNorm::new(
        vector(take(gamma, 1)?, 1)?,
        vector(take(beta, 2)?, 2)?,
        vector(take(mean, 3)?, 3)?,
        vector(take(var, 4)?, 4)?,
    );
    WeightBundle::new(conv, bn, manifest.source_model)
}

/// Serializes a bundle into `(manifest JSON, blob)` with canonical names
/// and contiguous offsets.
pub fn write_weight_bundle(bundle: &WeightBundle) -> Result<(String, Vec<u8>)> {
    bundle.validate()?;
    let c = bundle.bn.channels();
    let parts: [(&str, Vec<usize>, &[f32]); 5] = [
        (NAMES[0].0, bundle.conv_weights.shape().to_vec(), bundle.conv_weights.data()),
        (NAMES[1].0, vec![c], &bundle.bn.gamma),
        (NAMES[2].0, vec![c], &bundle.bn.beta),
        (NAMES[3].0, vec![c], &bundle.bn.mean),
        (NAMES[4].0, vec![c], &bundle.bn.var),
    ];
    let mut blob = Vec::new();
    let mut tensors = Vec::new();
    for (name, shape, values) in parts {
        tensors.push(TensorEntry {
            name: name.to_string(),
            shape,
            dtype: "f32".to_string(),
            offset: blob.len(),
        });
        for v in values {
            blob.extend_from_slice(&v.to_le_bytes());
        }
    }
    let manifest = BundleManifest {
        source_model: bundle.source_model.clone(),
        blob: default_blob(),
        tensors,
    };
    Ok((serde_json::to_string_pretty(&manifest)?, blob))
}

/// Reads `weights.json` and the blob it names (relative to the manifest).
pub fn read_weight_bundle(manifest_path: &Path) -> Result<WeightBundle> {
    let text = std::fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    let manifest: BundleManifest = serde_json::from_str(&text)?;
    let blob_path = manifest_path
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .join(&manifest.blob);
    let blob = std::fs::read(&blob_path).map_err(|e| Error::io(&blob_path, e))?;
    load_weight_bundle(&text, &blob)
}
