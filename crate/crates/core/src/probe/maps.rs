use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::GrayImage;

use super::Tensor;

/// Raw extrema before normalization, exported next to each map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapStats {
    pub raw_min: f32,
    pub raw_max: f32,
}

/// Min-max normalization into `[0, 1]`. A constant input maps to 0.5.
pub fn min_max_normalize(values: &[f32]) -> (Vec<f32>, MapStats) {
    let lo = values.iter().copied().fold(f32::INFINITY, f32::min);
    let hi = values.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let stats = MapStats { raw_min: lo, raw_max: hi };
    (normalize_with(values, lo, hi), stats)
}

fn normalize_with(values: &[f32], lo: f32, hi: f32) -> Vec<f32> {
    let range = hi - lo;
    if range.is_nan() || range <= 0.0 {
        return vec![0.5; values.len()];
    }
    values.iter().map(|&v| ((v - lo) / range).clamp(0.0, 1.0)).collect()
}

/// Signed mean over channels, min-max normalized.
pub fn average_activation_map(features: &Tensor) -> Result<(GrayImage, MapStats)> {
    let (c, h, w) = features.chw()?;
    if c == 0 {
        return Err(Error::Shape("feature tensor has no channels".into()));
    }
    let mut sum = vec![0.0f64; h * w];
    for ch in 0..c {
        for (s, &v) in sum.iter_mut().zip(features.channel(ch)) {
            *s += f64::from(v);
        }
    }
    let mean: Vec<f32> = sum.iter().map(|s| (s / c as f64) as f32).collect();
    let (data, stats) = min_max_normalize(&mean);
    Ok((GrayImage::new(w, h, data)?, stats))
}

/// One map per channel, all normalized with the global min and max across
/// channels so intensities compare between filters.
pub fn per_filter_maps(features: &Tensor) -> Result<(Vec<GrayImage>, MapStats)> {
    let (c, h, w) = features.chw()?;
    let (_, stats) = min_max_normalize(features.data());
    let maps = (0..c)
        .map(|ch| GrayImage::new(w, h, normalize_with(features.channel(ch), stats.raw_min, stats.raw_max)))
        .collect::<Result<_>>()?;
    Ok((maps, stats))
}

/// Tiles equally sized maps row-major into a grid `columns` wide.
pub fn montage(maps: &[GrayImage], columns: usize) -> Result<GrayImage> {
    let Some(first) = maps.first() else {
        return Ok(GrayImage::filled(0, 0, 0.0));
    };
    if columns == 0 {
        return Err(Error::param("montage needs at least one column"));
    }
    let (w, h) = first.dims();
    if maps.iter().any(|m| m.dims() != (w, h)) {
        return Err(Error::Shape("montage maps differ in size".into()));
    }
    let rows = maps.len().div_ceil(columns);
    Ok(GrayImage::from_fn(columns * w, rows * h, |x, y| {
        let idx = (y / h) * columns + x / w;
        maps.get(idx).map_or(0.0, |m| m.get(x % w, y % h))
    }))
}
