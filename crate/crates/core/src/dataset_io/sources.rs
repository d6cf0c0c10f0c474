//! Loaders for the source datasets as they ship on disk.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::class_map::CATEGORY_NAMES;
use super::{parse_labeled_idx, read_png_file, LabeledDataset};

pub fn digit_class_names() -> Vec<String> {
    (0..10).map(|d| d.to_string()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MnistSplit {
    Train,
    #[default]
    Test,
}

impl MnistSplit {
    fn file_names(self) -> (&'static str, &'static str) {
        match self {
            MnistSplit::Train => ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
            MnistSplit::Test => ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MnistSplit::Train => "train",
            MnistSplit::Test => "test",
        }
    }
}

impl std::str::FromStr for MnistSplit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(MnistSplit::Train),
            "test" | "t10k" => Ok(MnistSplit::Test),
            other => Err(Error::param(format!("unknown split `{other}`"))),
        }
    }
}

/// Loads MNIST from IDX files.
///
/// `input` is either the directory holding the standard file names for
/// `split` (a `.idx3-ubyte`/`.idx1-ubyte` dotted variant is also accepted)
/// or the image file itself, in which case `labels` must name the label file.
pub fn load_mnist(input: &Path, labels: Option<&Path>, split: MnistSplit) -> Result<LabeledDataset> {
    let (image_path, label_path) = if input.is_dir() {
        let (img, lbl) = split.file_names();
        (find_idx(input, img)?, find_idx(input, lbl)?)
    } else {
        let lbl = labels.ok_or_else(|| {
            Error::param(format!(
                "{} is a file; pass the matching label file as well",
                input.display()
            ))
        })?;
        (input.to_path_buf(), lbl.to_path_buf())
    };
    let images = std::fs::read(&image_path).map_err(|e| Error::io(&image_path, e))?;
    let labels = std::fs::read(&label_path).map_err(|e| Error::io(&label_path, e))?;
    parse_labeled_idx(
        &images,
        &labels,
        digit_class_names(),
        format!("mnist:{}:{}", split.as_str(), image_path.display()),
    )
}

fn find_idx(dir: &Path, name: &str) -> Result<PathBuf> {
    let dotted = name.replacen("-idx", ".idx", 1);
    [name.to_string(), dotted]
        .iter()
        .map(|n| dir.join(n))
        .find(|p| p.is_file())
        .ok_or_else(|| Error::io(dir.join(name), std::io::ErrorKind::NotFound.into()))
}

/// Loads a silhouette set laid out as `<dir>/<category>/<name>.png`, one
/// subdirectory per coarse category. Items are ordered by category then
/// file name.
pub fn load_silhouettes(dir: &Path) -> Result<LabeledDataset> {
    let class_names: Vec<String> = CATEGORY_NAMES.iter().map(|s| s.to_string()).collect();
    let mut ds = LabeledDataset::empty(0, 0, class_names, format!("silhouettes:{}", dir.display()));
    let mut found_any = false;
    for (label, category) in CATEGORY_NAMES.iter().enumerate() {
        let sub = dir.join(category);
        if !sub.is_dir() {
            continue;
        }
        found_any = true;
        let mut files: Vec<PathBuf> = std::fs::read_dir(&sub)
            .map_err(|e| Error::io(&sub, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")))
            .collect();
        files.sort();
        for path in files {
            ds.push(read_png_file(&path)?, label)?;
        }
    }
    if !found_any {
        return Err(Error::format(format!(
            "{} has no category subdirectories (expected e.g. `airplane/`, `bear/`, ...)",
            dir.display()
        )));
    }
    Ok(ds)
}
