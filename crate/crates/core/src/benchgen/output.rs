//! Streaming writer for generated benchmarks and manifest-driven
//! verification.
//!
//! Layout under the output directory:
//!
//! ```text
//! manifest.json
//! <dataset>/<direction>_<interval>/<index>_<label>.png
//! <dataset>/<direction>_<interval>/images-idx3-ubyte   (with --idx)
//! <dataset>/<direction>_<interval>/labels-idx1-ubyte   (with --idx)
//! ```

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::dataset_io::{
    content_hash, read_png_file, write_idx_labels, write_png_file, LabeledDataset, Manifest, ManifestSet,
    SubsetRecord,
};
use crate::error::{Error, Result};
use crate::image::GrayImage;

use super::{manifest_header, manifest_item, render_items, set_path, source_index, ConditionGrid, DatasetKind, GenOptions, Pipeline};

#[derive(Debug, Clone)]
pub struct OutputOptions {
    /// Also write IDX image/label files per condition.
    pub idx: bool,
    /// Stimuli rendered per parallel batch; bounds peak memory.
    pub batch: usize,
}

impl Default for OutputOptions {
    fn default() -> Self {
        Self { idx: false, batch: 512 }
    }
}

/// Generates `grid` over `dataset` straight to `out_dir` and writes
/// `out_dir/manifest.json`. Pass `subset` when `dataset` is a sampled draw.
pub fn write_benchmark(
    dataset: &LabeledDataset,
    subset: Option<SubsetRecord>,
    grid: &ConditionGrid,
    options: &GenOptions,
    out_dir: &Path,
    output: &OutputOptions,
) -> Result<Manifest> {
    let pipeline = Pipeline::new(grid.dataset, options.clone());
    for (d, i) in grid.conditions() {
        pipeline.spec(d, i).validate()?;
    }
    if dataset.is_empty() && !grid.is_empty() {
        return Err(Error::param("cannot generate from an empty dataset"));
    }
    if let Some(s) = &subset {
        if s.source_indices.len() != dataset.len() {
            return Err(Error::param("subset record does not match the dataset size"));
        }
    }
    let mut manifest = manifest_header(dataset, &pipeline, subset);
    let (w, h) = pipeline.output_dims(dataset);
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    for (direction, interval) in grid.conditions() {
        let spec = pipeline.spec(direction, interval);
        let rel = set_path(grid.dataset, &spec);
        let dir = out_dir.join(&rel);
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;

        let mut idx_images = if output.idx {
            let path = dir.join("images-idx3-ubyte");
            let mut f = BufWriter::new(File::create(&path).map_err(|e| Error::io(&path, e))?);
            let mut header = 0x0000_0803u32.to_be_bytes().to_vec();
            for d in [dataset.len(), h, w] {
                header.extend_from_slice(&(d as u32).to_be_bytes());
            }
            f.write_all(&header).map_err(|e| Error::io(&path, e))?;
            Some((path, f))
        } else {
            None
        };

        let mut items = Vec::with_capacity(dataset.len());
        let batch = output.batch.max(1);
        for start in (0..dataset.len()).step_by(batch) {
            let end = (start + batch).min(dataset.len());
            let images = render_items(&pipeline, dataset, &spec, start..end)?;
            let batch_items: Vec<_> = images
                .par_iter()
                .enumerate()
                .map(|(k, img)| {
                    let i = start + k;
                    let item = manifest_item(i, source_index(manifest.subset.as_ref(), i), dataset.items()[i].label, img);
                    write_png_file(&dir.join(&item.file), img)?;
                    Ok(item)
                })
                .collect::<Result<_>>()?;
            items.extend(batch_items);
            if let Some((path, f)) = idx_images.as_mut() {
                for img in &images {
                    f.write_all(&img.to_u8()).map_err(|e| Error::io(path.as_path(), e))?;
                }
            }
        }
        if let Some((path, mut f)) = idx_images {
            f.flush().map_err(|e| Error::io(&path, e))?;
            let labels_path = dir.join("labels-idx1-ubyte");
            std::fs::write(&labels_path, write_idx_labels(dataset)?).map_err(|e| Error::io(&labels_path, e))?;
        }
        manifest.sets.push(ManifestSet { path: rel, spec, items });
    }
    manifest.total_stimuli = manifest.sets.iter().map(|s| s.items.len()).sum();
    manifest.write(&out_dir.join("manifest.json"))?;
    Ok(manifest)
}

/// Regenerates every stimulus listed in `manifest` from the source dataset
/// and returns the `<set>/<file>` entries whose hash differs.
pub fn verify_benchmark(manifest: &Manifest, source: &LabeledDataset) -> Result<Vec<String>> {
    let kind: DatasetKind = manifest.dataset.parse()?;
    let dataset = match &manifest.subset {
        Some(s) => {
            if let Some(&bad) = s.source_indices.iter().find(|&&i| i >= source.len()) {
                return Err(Error::param(format!("subset index {bad} beyond source of {}", source.len())));
            }
            source.select(&s.source_indices, source.source())
        }
        None => source.clone(),
    };
    let mut mismatches = Vec::new();
    for set in &manifest.sets {
        let options = GenOptions {
            threshold: set.spec.threshold,
            figure_phase: set.spec.figure_phase,
            polarity: set.spec.polarity,
            figure_is_dark: Some(manifest.figure_is_dark),
            kernel: manifest.interpolation.as_ref().map(|i| i.kernel).unwrap_or_default(),
        };
        let pipeline = Pipeline::new(kind, options);
        let bad: Vec<String> = set
            .items
            .par_iter()
            .map(|item| -> Result<Option<String>> {
                let sample = dataset
                    .items()
                    .get(item.index)
                    .ok_or_else(|| Error::param(format!("manifest index {} beyond dataset", item.index)))?;
                let img = pipeline.render(&sample.image, &set.spec)?;
                Ok((content_hash(&img) != item.sha256 || sample.label != item.label)
                    .then(|| format!("{}/{}", set.path, item.file)))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        mismatches.extend(bad);
    }
    Ok(mismatches)
}

/// Re-hashes the PNG files under `out_dir` against their manifest entries.
pub fn verify_files(out_dir: &Path, manifest: &Manifest) -> Result<Vec<String>> {
    let entries: Vec<(String, &str)> = manifest
        .sets
        .iter()
        .flat_map(|s| s.items.iter().map(move |i| (format!("{}/{}", s.path, i.file), i.sha256.as_str())))
        .collect();
    let bad = entries
        .par_iter()
        .map(|(rel, hash)| -> Result<Option<String>> {
            let img: GrayImage = read_png_file(&out_dir.join(rel))?;
            Ok((content_hash(&img) != *hash).then(|| rel.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(bad.into_iter().flatten().collect())
}
