//! External data formats: IDX, grayscale PNG, class-mapping tables and
//! benchmark manifests, plus the in-memory [`LabeledDataset`].

mod class_map;
mod idx;
mod manifest;
mod png_gray;
mod sources;

pub use class_map::{load_class_map, ClassMap, CATEGORY_NAMES, FINE_CLASSES};
pub use idx::{parse_idx, parse_labeled_idx, write_idx_images, write_idx_labels, IdxData};
pub use manifest::{
    content_hash, InterpolationRecord, Manifest, ManifestItem, ManifestSet, SubsetRecord, MANIFEST_VERSION,
};
pub use png_gray::{load_png_gray, read_png_file, write_png_file, write_png_gray};
pub use sources::{digit_class_names, load_mnist, load_silhouettes, MnistSplit};

use crate::error::{Error, Result};
use crate::image::GrayImage;

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub image: GrayImage,
    pub label: usize,
}

/// Ordered `(image, label)` collection with a class-name table.
///
/// All images share one size and every label indexes `class_names`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    width: usize,
    height: usize,
    items: Vec<Sample>,
    class_names: Vec<String>,
    source: String,
}

impl LabeledDataset {
    /// Empty dataset with a fixed image size.
    pub fn empty(width: usize, height: usize, class_names: Vec<String>, source: impl Into<String>) -> Self {
        Self {
            width,
            height,
            items: Vec::new(),
            class_names,
            source: source.into(),
        }
    }

    /// Builds a dataset from samples. Image size is taken from the first
    /// item; an empty item list yields a 0x0 dataset.
    pub fn new(items: Vec<Sample>, class_names: Vec<String>, source: impl Into<String>) -> Result<Self> {
        let (width, height) = items.first().map(|s| s.image.dims()).unwrap_or((0, 0));
        let mut ds = Self::empty(width, height, class_names, source);
        for s in items {
            ds.push(s.image, s.label)?;
        }
        Ok(ds)
    }

    pub fn push(&mut self, image: GrayImage, label: usize) -> Result<()> {
        if image.dims() != (self.width, self.height) {
            if self.items.is_empty() && self.width == 0 && self.height == 0 {
                self.width = image.width();
                self.height = image.height();
            } else {
                return Err(Error::Shape(format!(
                    "dataset holds {}x{} images, got {}x{}",
                    self.width,
                    self.height,
                    image.width(),
                    image.height()
                )));
            }
        }
        if label >= self.class_names.len() {
            return Err(Error::param(format!(
                "label {label} out of range for {} classes",
                self.class_names.len()
            )));
        }
        self.items.push(Sample { image, label });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn items(&self) -> &[Sample] {
        &self.items
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn labels(&self) -> impl Iterator<Item = usize> + '_ {
        self.items.iter().map(|s| s.label)
    }

    /// Stable identifier of item `index`, also used as the PNG file stem.
    pub fn stimulus_id(&self, index: usize) -> String {
        stimulus_id(index, self.items[index].label)
    }

    /// New dataset holding the items at `indices`, in that order.
    pub fn select(&self, indices: &[usize], source: impl Into<String>) -> Self {
        Self {
            width: self.width,
            height: self.height,
            items: indices.iter().map(|&i| self.items[i].clone()).collect(),
            class_names: self.class_names.clone(),
            source: source.into(),
        }
    }

    /// Applies `f` to every image, keeping labels and class names.
    pub fn map_images<F>(&self, source: impl Into<String>, f: F) -> Result<Self>
    where
        F: Fn(&GrayImage) -> Result<GrayImage> + Sync,
    {
        use rayon::prelude::*;
        let images: Vec<GrayImage> = self
            .items
            .par_iter()
            .map(|s| f(&s.image))
            .collect::<Result<_>>()?;
        let mut out = Self::empty(0, 0, self.class_names.clone(), source);
        if let Some(first) = images.first() {
            out.width = first.width();
            out.height = first.height();
        }
        for (img, s) in images.into_iter().zip(&self.items) {
            out.push(img, s.label)?;
        }
        Ok(out)
    }
}

/// `<index>_<label>`, index zero-padded to five digits.
pub fn stimulus_id(index: usize, label: usize) -> String {
    format!("{index:05}_{label}")
}

/// Inverse of [`stimulus_id`].
pub fn parse_stimulus_id(id: &str) -> Option<(usize, usize)> {
    let (index, label) = id.split_once('_')?;
    Some((index.parse().ok()?, label.parse().ok()?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| i.to_string()).collect()
    }

    #[test]
    fn rejects_mixed_sizes_and_bad_labels() {
        let mut ds = LabeledDataset::empty(2, 2, names(3), "t");
        ds.push(GrayImage::filled(2, 2, 0.0), 2).unwrap();
        assert!(ds.push(GrayImage::filled(3, 2, 0.0), 0).is_err());
        assert!(ds.push(GrayImage::filled(2, 2, 0.0), 3).is_err());
        assert_eq!(ds.len(), 1);
    }

    #[test]
    fn stimulus_ids_round_trip() {
        assert_eq!(stimulus_id(7, 3), "00007_3");
        assert_eq!(parse_stimulus_id("00007_3"), Some((7, 3)));
        assert_eq!(parse_stimulus_id("7"), None);
    }
}
