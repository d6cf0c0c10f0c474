//! Deterministic synthetic stand-ins for the digit and silhouette datasets.
//!
//! Digits are anti-aliased seven-segment strokes on black with random
//! offset, slant and stroke width. Silhouettes are dark unions of ellipses
//! on white, one base layout per category plus per-item jitter.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset_io::{digit_class_names, write_png_file, LabeledDataset, CATEGORY_NAMES};
use crate::error::{Error, Result};
use crate::image::GrayImage;

pub const DIGIT_SIZE: usize = 28;

// Segment order: top, upper-right, lower-right, bottom, lower-left, upper-left, middle.
const SEGMENTS: [[(f32, f32); 2]; 7] = [
    [(9.0, 6.0), (19.0, 6.0)],
    [(19.0, 6.0), (19.0, 14.0)],
    [(19.0, 14.0), (19.0, 22.0)],
    [(9.0, 22.0), (19.0, 22.0)],
    [(9.0, 14.0), (9.0, 22.0)],
    [(9.0, 6.0), (9.0, 14.0)],
    [(9.0, 14.0), (19.0, 14.0)],
];

const DIGIT_SEGMENTS: [u8; 10] = [
    0b0111111, 0b0000110, 0b1011011, 0b1001111, 0b1100110, 0b1101101, 0b1111101, 0b0000111, 0b1111111, 0b1101111,
];

fn segment_distance(px: f32, py: f32, a: (f32, f32), b: (f32, f32)) -> f32 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { (((px - a.0) * dx + (py - a.1) * dy) / len2).clamp(0.0, 1.0) };
    let (cx, cy) = (a.0 + t * dx, a.1 + t * dy);
    ((px - cx).powi(2) + (py - cy).powi(2)).sqrt()
}

fn render_digit(digit: usize, rng: &mut ChaCha8Rng) -> GrayImage {
    let (ox, oy) = (rng.random_range(-2.0..2.0f32), rng.random_range(-2.0..2.0f32));
    let slant = rng.random_range(-0.25..0.25f32);
    let radius = rng.random_range(1.0..1.8f32);
    let segs: Vec<_> = SEGMENTS
        .iter()
        .enumerate()
        .filter(|(k, _)| DIGIT_SEGMENTS[digit] >> k & 1 == 1)
        .map(|(_, s)| {
            let warp = |(x, y): (f32, f32)| (x + ox + slant * (14.0 - y), y + oy);
            (warp(s[0]), warp(s[1]))
        })
        .collect();
    GrayImage::from_fn(DIGIT_SIZE, DIGIT_SIZE, |x, y| {
        let (px, py) = (x as f32 + 0.5, y as f32 + 0.5);
        let d = segs
            .iter()
            .map(|&(a, b)| segment_distance(px, py, a, b))
            .fold(f32::INFINITY, f32::min);
        (radius + 0.5 - d).clamp(0.0, 1.0)
    })
}

/// `n` 28x28 digits, label `i % 10`, deterministic in `seed`.
pub fn synthetic_digits(n: usize, seed: u64) -> LabeledDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ds = LabeledDataset::empty(DIGIT_SIZE, DIGIT_SIZE, digit_class_names(), format!("synthetic-digits:{seed}"));
    for i in 0..n {
        let label = i % 10;
        ds.push(render_digit(label, &mut rng), label).expect("size and label are valid");
    }
    ds
}

#[derive(Clone, Copy)]
struct Ellipse {
    cx: f32,
    cy: f32,
    rx: f32,
    ry: f32,
    angle: f32,
}

impl Ellipse {
    /// Signed distance estimate in pixels, negative inside.
    fn distance(&self, x: f32, y: f32) -> f32 {
        let (s, c) = self.angle.sin_cos();
        let (dx, dy) = (x - self.cx, y - self.cy);
        let (u, v) = (c * dx + s * dy, -s * dx + c * dy);
        let r = ((u / self.rx).powi(2) + (v / self.ry).powi(2)).sqrt();
        (r - 1.0) * self.rx.min(self.ry)
    }
}

fn category_layout(category: usize, seed: u64) -> Vec<Ellipse> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(category as u64 + 1)));
    let parts = 2 + category % 4;
    (0..parts)
        .map(|_| Ellipse {
            cx: rng.random_range(0.3..0.7),
            cy: rng.random_range(0.3..0.7),
            rx: rng.random_range(0.08..0.3),
            ry: rng.random_range(0.05..0.2),
            angle: rng.random_range(0.0..std::f32::consts::PI),
        })
        .collect()
}

fn render_silhouette(layout: &[Ellipse], size: usize, rng: &mut ChaCha8Rng) -> GrayImage {
    let s = size as f32;
    let scale = rng.random_range(0.85..1.15f32);
    let (ox, oy) = (rng.random_range(-0.05..0.05f32), rng.random_range(-0.05..0.05f32));
    let shapes: Vec<Ellipse> = layout
        .iter()
        .map(|e| Ellipse {
            cx: (0.5 + (e.cx - 0.5) * scale + ox) * s,
            cy: (0.5 + (e.cy - 0.5) * scale + oy) * s,
            rx: e.rx * scale * s,
            ry: e.ry * scale * s,
            angle: e.angle + rng.random_range(-0.2..0.2f32),
        })
        .collect();
    GrayImage::from_fn(size, size, |x, y| {
        let (px, py) = (x as f32 + 0.5, y as f32 + 0.5);
        let d = shapes.iter().map(|e| e.distance(px, py)).fold(f32::INFINITY, f32::min);
        (d + 0.5).clamp(0.0, 1.0)
    })
}

/// `per_class` dark silhouettes of each of the sixteen categories, ordered
/// category-major, deterministic in `seed`.
pub fn synthetic_silhouettes(per_class: usize, size: usize, seed: u64) -> LabeledDataset {
    let names: Vec<String> = CATEGORY_NAMES.iter().map(|s| s.to_string()).collect();
    let mut ds = LabeledDataset::empty(size, size, names, format!("synthetic-silhouettes:{seed}"));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for category in 0..CATEGORY_NAMES.len() {
        let layout = category_layout(category, seed);
        for _ in 0..per_class {
            ds.push(render_silhouette(&layout, size, &mut rng), category)
                .expect("size and label are valid");
        }
    }
    ds
}

/// Writes `<dir>/<class name>/<nnn>.png`, the layout `load_silhouettes` reads.
pub fn write_class_dirs(dataset: &LabeledDataset, dir: &Path) -> Result<()> {
    let mut counters = vec![0usize; dataset.class_names().len()];
    for sample in dataset.items() {
        let class_dir = dir.join(&dataset.class_names()[sample.label]);
        std::fs::create_dir_all(&class_dir).map_err(|e| Error::io(&class_dir, e))?;
        write_png_file(&class_dir.join(format!("{:03}.png", counters[sample.label])), &sample.image)?;
        counters[sample.label] += 1;
    }
    Ok(())
}
