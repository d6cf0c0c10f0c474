//! IDX reader/writer for the MNIST distribution format.
//!
//! ```text
//! bytes 0-3   magic, big-endian: 0x00000803 (u8 images) or 0x00000801 (u8 labels)
//! bytes 4..   one big-endian u32 per dimension
//! then        raw u8 payload, row-major
//! ```

use crate::error::{Error, Result};
use crate::image::GrayImage;

use super::LabeledDataset;

const MAGIC_IMAGES: u32 = 0x0000_0803;
const MAGIC_LABELS: u32 = 0x0000_0801;

#[derive(Debug, Clone, PartialEq)]
pub enum IdxData {
    Images {
        rows: usize,
        cols: usize,
        images: Vec<GrayImage>,
    },
    Labels(Vec<u8>),
}

fn read_u32(bytes: &[u8], at: usize) -> Result<u32> {
    let chunk = bytes.get(at..at + 4).ok_or(Error::Length {
        expected: at + 4,
        found: bytes.len(),
    })?;
    Ok(u32::from_be_bytes(chunk.try_into().expect("4-byte slice")))
}

/// Parses an IDX image (rank 3) or label (rank 1) file. Pixel bytes are
/// scaled to `[0, 1]` by `/ 255`.
pub fn parse_idx(bytes: &[u8]) -> Result<IdxData> {
    let magic = read_u32(bytes, 0)?;
    match magic {
        MAGIC_IMAGES => {
            let count = read_u32(bytes, 4)? as usize;
            let rows = read_u32(bytes, 8)? as usize;
            let cols = read_u32(bytes, 12)? as usize;
            let per_image = rows
                .checked_mul(cols)
                .ok_or_else(|| Error::format("image dimensions overflow"))?;
            let payload = count
                .checked_mul(per_image)
                .ok_or_else(|| Error::format("payload size overflows"))?;
            let expected = 16 + payload;
            if bytes.len() != expected {
                return Err(Error::Length {
                    expected,
                    found: bytes.len(),
                });
            }
            let images = if per_image == 0 {
                (0..count).map(|_| GrayImage::filled(cols, rows, 0.0)).collect()
            } else {
                bytes[16..]
                    .chunks_exact(per_image)
                    .map(|px| GrayImage::from_u8(cols, rows, px))
                    .collect::<Result<_>>()?
            };
            Ok(IdxData::Images { rows, cols, images })
        }
        MAGIC_LABELS => {
            let count = read_u32(bytes, 4)? as usize;
            let expected = 8 + count;
            if bytes.len() != expected {
                return Err(Error::Length {
                    expected,
                    found: bytes.len(),
                });
            }
            Ok(IdxData::Labels(bytes[8..].to_vec()))
        }
        other => Err(Error::format(format!(
            "bad IDX magic 0x{other:08x}; expected 0x{MAGIC_IMAGES:08x} or 0x{MAGIC_LABELS:08x}"
        ))),
    }
}

/// Pairs an image file and a label file into a dataset.
pub fn parse_labeled_idx(
    image_bytes: &[u8],
    label_bytes: &[u8],
    class_names: Vec<String>,
    source: impl Into<String>,
) -> Result<LabeledDataset> {
    let (rows, cols, images) = match parse_idx(image_bytes)? {
        IdxData::Images { rows, cols, images } => (rows, cols, images),
        IdxData::Labels(_) => return Err(Error::format("expected an IDX image file, found labels")),
    };
    let labels = match parse_idx(label_bytes)? {
        IdxData::Labels(l) => l,
        IdxData::Images { .. } => return Err(Error::format("expected an IDX label file, found images")),
    };
    if labels.len() != images.len() {
        return Err(Error::format(format!(
            "{} images but {} labels",
            images.len(),
            labels.len()
        )));
    }
    let mut ds = LabeledDataset::empty(cols, rows, class_names, source);
    for (image, label) in images.into_iter().zip(labels) {
        ds.push(image, usize::from(label))?;
    }
    Ok(ds)
}

/// Serializes the images of `dataset`, quantizing with `round(v * 255)`.
pub fn write_idx_images(dataset: &LabeledDataset) -> Vec<u8> {
    let (w, h) = (dataset.width(), dataset.height());
    let mut out = Vec::with_capacity(16 + dataset.len() * w * h);
    out.extend_from_slice(&MAGIC_IMAGES.to_be_bytes());
    for dim in [dataset.len(), h, w] {
        out.extend_from_slice(&(dim as u32).to_be_bytes());
    }
    for s in dataset.items() {
        out.extend(s.image.to_u8());
    }
    out
}

/// Serializes the labels of `dataset`. Labels must fit in a byte.
pub fn write_idx_labels(dataset: &LabeledDataset) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(8 + dataset.len());
    out.extend_from_slice(&MAGIC_LABELS.to_be_bytes());
    out.extend_from_slice(&(dataset.len() as u32).to_be_bytes());
    for label in dataset.labels() {
        let byte = u8::try_from(label)
            .map_err(|_| Error::format(format!("label {label} does not fit in an IDX u8")))?;
        out.push(byte);
    }
    Ok(out)
}
