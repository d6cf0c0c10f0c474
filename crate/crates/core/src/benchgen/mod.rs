//! End-to-end benchmark generation: condition grids, the per-stimulus
//! pipeline, on-disk output with a manifest, and human-study subsets.

mod output;
mod sampling;

pub use output::{verify_benchmark, verify_files, write_benchmark, OutputOptions};
pub use sampling::{sample_human_subset, sample_human_subset_excluding, HumanSubset, PER_CLASS};

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset_io::{
    content_hash, stimulus_id, InterpolationRecord, LabeledDataset, Manifest, ManifestItem, ManifestSet,
    SubsetRecord, MANIFEST_VERSION,
};
use crate::error::{Error, Result};
use crate::grating::{binarize_with, compose, Direction, GratingSpec, MaskPair, Polarity, DEFAULT_THRESHOLD};
use crate::image::GrayImage;
use crate::interpolate::{upsample, Kernel};

/// Side length of the upsampled MNIST variant.
pub const HIRES_SIZE: usize = 224;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DatasetKind {
    #[serde(rename = "mnist")]
    Mnist,
    #[serde(rename = "mnist-hires")]
    MnistHires,
    #[serde(rename = "silhouettes")]
    Silhouettes,
}

impl DatasetKind {
    pub const ALL: [DatasetKind; 3] = [DatasetKind::Mnist, DatasetKind::MnistHires, DatasetKind::Silhouettes];

    pub fn name(self) -> &'static str {
        match self {
            DatasetKind::Mnist => "mnist",
            DatasetKind::MnistHires => "mnist-hires",
            DatasetKind::Silhouettes => "silhouettes",
        }
    }

    /// Silhouettes are black figures on white; digits are white on black.
    pub fn default_figure_is_dark(self) -> bool {
        self == DatasetKind::Silhouettes
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mnist" => Ok(DatasetKind::Mnist),
            "mnist-hires" | "mnist_hires" => Ok(DatasetKind::MnistHires),
            "silhouettes" => Ok(DatasetKind::Silhouettes),
            other => Err(Error::param(format!("unknown dataset `{other}`"))),
        }
    }
}

/// The (direction, interval) conditions to generate for one dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionGrid {
    pub dataset: DatasetKind,
    pub directions: Vec<Direction>,
    pub intervals: Vec<usize>,
}

impl ConditionGrid {
    /// The benchmark grids: horizontal 2/4/6/8 for MNIST, all directions at
    /// 4/8/16/32 for upsampled MNIST, all directions at 4..=14 step 2 for
    /// silhouettes.
    pub fn default_for(dataset: DatasetKind) -> Self {
        let (directions, intervals) = match dataset {
            DatasetKind::Mnist => (vec![Direction::Horizontal], vec![2, 4, 6, 8]),
            DatasetKind::MnistHires => (Direction::ALL.to_vec(), vec![4, 8, 16, 32]),
            DatasetKind::Silhouettes => (Direction::ALL.to_vec(), (4..=14).step_by(2).collect()),
        };
        Self {
            dataset,
            directions,
            intervals,
        }
    }

    /// Conditions shown to human subjects: all directions at intervals 4 and
    /// 6 (MNIST, silhouettes) or 4 and 8 (upsampled MNIST).
    pub fn human_study(dataset: DatasetKind) -> Self {
        let intervals = match dataset {
            DatasetKind::MnistHires => vec![4, 8],
            _ => vec![4, 6],
        };
        Self {
            dataset,
            directions: Direction::ALL.to_vec(),
            intervals,
        }
    }

    /// Conditions in generation order: direction-major, then interval.
    pub fn conditions(&self) -> impl Iterator<Item = (Direction, usize)> + '_ {
        self.directions
            .iter()
            .flat_map(move |&d| self.intervals.iter().map(move |&i| (d, i)))
    }

    pub fn len(&self) -> usize {
        self.directions.len() * self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Corruption parameters shared by every condition of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct GenOptions {
    pub threshold: f32,
    pub figure_phase: usize,
    pub polarity: Polarity,
    /// `None` picks the dataset's convention.
    pub figure_is_dark: Option<bool>,
    pub kernel: Kernel,
}

impl Default for GenOptions {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            figure_phase: 0,
            polarity: Polarity::default(),
            figure_is_dark: None,
            kernel: Kernel::default(),
        }
    }
}

/// Per-stimulus pipeline: optional upsampling, binarization, composition.
#[derive(Debug, Clone, PartialEq)]
pub struct Pipeline {
    pub kind: DatasetKind,
    pub options: GenOptions,
    pub figure_is_dark: bool,
    pub upsample_to: Option<(usize, usize)>,
}

impl Pipeline {
    pub fn new(kind: DatasetKind, options: GenOptions) -> Self {
        let figure_is_dark = options.figure_is_dark.unwrap_or(kind.default_figure_is_dark());
        let upsample_to = (kind == DatasetKind::MnistHires).then_some((HIRES_SIZE, HIRES_SIZE));
        Self {
            kind,
            options,
            figure_is_dark,
            upsample_to,
        }
    }

    pub fn spec(&self, direction: Direction, interval: usize) -> GratingSpec {
        GratingSpec::new(direction, interval)
            .with_threshold(self.options.threshold)
            .with_figure_phase(self.options.figure_phase)
            .with_polarity(self.options.polarity)
    }

    /// The image the masks are computed from.
    pub fn prepare(&self, image: &GrayImage) -> Result<GrayImage> {
        match self.upsample_to {
            Some((w, h)) => upsample(image, w, h, self.options.kernel),
            None => Ok(image.clone()),
        }
    }

    pub fn masks(&self, image: &GrayImage) -> Result<MaskPair> {
        Ok(binarize_with(&self.prepare(image)?, self.options.threshold, self.figure_is_dark))
    }

    pub fn render(&self, image: &GrayImage, spec: &GratingSpec) -> Result<GrayImage> {
        spec.validate()?;
        compose(&self.masks(image)?, spec)
    }

    pub fn output_dims(&self, dataset: &LabeledDataset) -> (usize, usize) {
        self.upsample_to.unwrap_or((dataset.width(), dataset.height()))
    }

    fn interpolation_record(&self, dataset: &LabeledDataset) -> Option<InterpolationRecord> {
        self.upsample_to.map(|_| InterpolationRecord {
            kernel: self.options.kernel,
            source_width: dataset.width(),
            source_height: dataset.height(),
        })
    }
}

/// Corrupted images of one condition, in dataset order.
#[derive(Debug, Clone)]
pub struct ConditionSet {
    pub spec: GratingSpec,
    pub images: Vec<GrayImage>,
}

/// In-memory result of [`generate`].
#[derive(Debug, Clone)]
pub struct Benchmark {
    pub manifest: Manifest,
    pub sets: Vec<ConditionSet>,
}

impl Benchmark {
    pub fn stimulus_count(&self) -> usize {
        self.sets.iter().map(|s| s.images.len()).sum()
    }
}

/// Relative directory of a condition set.
pub fn set_path(kind: DatasetKind, spec: &GratingSpec) -> String {
    format!("{}/{}", kind.name(), spec.condition_name())
}

pub(crate) fn manifest_header(
    dataset: &LabeledDataset,
    pipeline: &Pipeline,
    subset: Option<SubsetRecord>,
) -> Manifest {
    let (width, height) = pipeline.output_dims(dataset);
    let split = matches!(pipeline.kind, DatasetKind::Mnist | DatasetKind::MnistHires).then(|| {
        // `mnist:<split>:<path>` as written by the loader; test split otherwise.
        dataset
            .source()
            .strip_prefix("mnist:")
            .and_then(|s| s.split(':').next())
            .unwrap_or("test")
            .to_string()
    });
    Manifest {
        version: MANIFEST_VERSION,
        dataset: pipeline.kind.name().to_string(),
        source: dataset.source().to_string(),
        split,
        width,
        height,
        class_names: dataset.class_names().to_vec(),
        figure_is_dark: pipeline.figure_is_dark,
        interpolation: pipeline.interpolation_record(dataset),
        subset,
        total_stimuli: 0,
        sets: Vec::new(),
    }
}

pub(crate) fn source_index(subset: Option<&SubsetRecord>, i: usize) -> usize {
    subset.map_or(i, |s| s.source_indices[i])
}

pub(crate) fn render_items(
    pipeline: &Pipeline,
    dataset: &LabeledDataset,
    spec: &GratingSpec,
    range: std::ops::Range<usize>,
) -> Result<Vec<GrayImage>> {
    dataset.items()[range]
        .par_iter()
        .map(|s| pipeline.render(&s.image, spec))
        .collect()
}

pub(crate) fn manifest_item(index: usize, source_index: usize, label: usize, image: &GrayImage) -> ManifestItem {
    ManifestItem {
        index,
        source_index,
        label,
        file: format!("{}.png", stimulus_id(index, label)),
        sha256: content_hash(image),
    }
}

/// Generates every condition of `grid` in memory.
pub fn generate(dataset: &LabeledDataset, grid: &ConditionGrid, options: &GenOptions) -> Result<Benchmark> {
    generate_inner(dataset, grid, options, None)
}

/// Generates a human-study subset; the manifest records the draw.
pub fn generate_subset(subset: &HumanSubset, grid: &ConditionGrid, options: &GenOptions) -> Result<Benchmark> {
    generate_inner(&subset.dataset, grid, options, Some(subset.record()))
}

fn generate_inner(
    dataset: &LabeledDataset,
    grid: &ConditionGrid,
    options: &GenOptions,
    subset: Option<SubsetRecord>,
) -> Result<Benchmark> {
    let pipeline = Pipeline::new(grid.dataset, options.clone());
    for (d, i) in grid.conditions() {
        pipeline.spec(d, i).validate()?;
    }
    if dataset.is_empty() && !grid.is_empty() {
        return Err(Error::param("cannot generate from an empty dataset"));
    }
    let mut manifest = manifest_header(dataset, &pipeline, subset);
    let mut sets = Vec::with_capacity(grid.len());
    for (direction, interval) in grid.conditions() {
        let spec = pipeline.spec(direction, interval);
        let images = render_items(&pipeline, dataset, &spec, 0..dataset.len())?;
        let items = images
            .iter()
            .zip(dataset.items())
            .enumerate()
            .map(|(i, (img, s))| manifest_item(i, source_index(manifest.subset.as_ref(), i), s.label, img))
            .collect();
        manifest.sets.push(ManifestSet {
            path: set_path(grid.dataset, &spec),
            spec,
            items,
        });
        sets.push(ConditionSet { spec, images });
    }
    manifest.total_stimuli = sets.iter().map(|s| s.images.len()).sum();
    Ok(Benchmark { manifest, sets })
}
