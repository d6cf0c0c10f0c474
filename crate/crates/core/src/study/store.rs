use std::collections::HashMap;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use walkdir::WalkDir;

use crate::benchgen::{DatasetKind, PER_CLASS};
use crate::dataset_io::Manifest;
use crate::error::{Error, Result};
use crate::grating::Direction;

/// Block order of every session.
pub const BLOCK_ORDER: [DatasetKind; 3] = [DatasetKind::Mnist, DatasetKind::MnistHires, DatasetKind::Silhouettes];

/// Stimuli per block: ten per class.
pub fn block_size(kind: DatasetKind) -> usize {
    match kind {
        DatasetKind::Silhouettes => 16 * PER_CLASS,
        _ => 10 * PER_CLASS,
    }
}

/// On-screen edge length in CSS pixels (about 0.7 cm for 28-pixel digits,
/// 5.6 cm for the large stimuli at 96 dpi).
pub fn display_px(kind: DatasetKind) -> u32 {
    match kind {
        DatasetKind::Mnist => 26,
        _ => 212,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoredStimulus {
    pub path: PathBuf,
    pub label: usize,
    pub kind: DatasetKind,
}

/// One condition set found in the store.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoredSet {
    pub kind: DatasetKind,
    pub direction: Direction,
    pub interval: usize,
    pub class_names: Vec<String>,
    /// Directory of the set relative to the store root.
    pub location: String,
    /// Opaque stimulus ids in manifest order.
    pub stimuli: Vec<String>,
}

/// Index of every benchmark manifest under a root directory.
#[derive(Debug, Clone, Default)]
pub struct StimulusStore {
    root: PathBuf,
    sets: Vec<StoredSet>,
    stimuli: HashMap<String, StoredStimulus>,
}

impl StimulusStore {
    pub fn open(root: &Path) -> Result<Self> {
        let mut manifests: Vec<PathBuf> = WalkDir::new(root)
            .into_iter()
            .filter_map(|e| e.ok())
            .filter(|e| e.file_type().is_file() && e.file_name() == "manifest.json")
            .map(|e| e.into_path())
            .collect();
        manifests.sort();
        let mut store = Self {
            root: root.to_path_buf(),
            ..Self::default()
        };
        for path in manifests {
            let manifest = Manifest::read(&path)?;
            let dir = path.parent().unwrap_or(root);
            store.add_manifest(dir, &manifest)?;
        }
        Ok(store)
    }

    fn add_manifest(&mut self, dir: &Path, manifest: &Manifest) -> Result<()> {
        let kind: DatasetKind = manifest.dataset.parse()?;
        let rel_dir = dir.strip_prefix(&self.root).unwrap_or(dir).to_string_lossy().replace('\\', "/");
        for set in &manifest.sets {
            let location = if rel_dir.is_empty() {
                set.path.clone()
            } else {
                format!("{rel_dir}/{}", set.path)
            };
            let mut ids = Vec::with_capacity(set.items.len());
            for item in &set.items {
                let mut h = Sha256::new();
                h.update(location.as_bytes());
                h.update(b"/");
                h.update(item.file.as_bytes());
                h.update(item.sha256.as_bytes());
                let id = hex::encode(h.finalize())[..20].to_string();
                let stored = StoredStimulus {
                    path: dir.join(&set.path).join(&item.file),
                    label: item.label,
                    kind,
                };
                if self.stimuli.insert(id.clone(), stored).is_some() {
                    return Err(Error::format(format!("stimulus id collision in {location}")));
                }
                ids.push(id);
            }
            self.sets.push(StoredSet {
                kind,
                direction: set.spec.direction,
                interval: set.spec.interval,
                class_names: manifest.class_names.clone(),
                location,
                stimuli: ids,
            });
        }
        Ok(())
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn sets(&self) -> &[StoredSet] {
        &self.sets
    }

    pub fn stimulus(&self, id: &str) -> Option<&StoredStimulus> {
        self.stimuli.get(id)
    }

    /// First set (in store path order) with this condition and exactly the
    /// block size of `kind`.
    pub fn find_block(&self, kind: DatasetKind, direction: Direction, interval: usize) -> Option<&StoredSet> {
        self.sets.iter().find(|s| {
            s.kind == kind && s.direction == direction && s.interval == interval && s.stimuli.len() == block_size(kind)
        })
    }
}
