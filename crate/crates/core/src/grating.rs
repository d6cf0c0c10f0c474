//! Abutting-grating corruption.
//!
//! An image is split into figure and background masks by thresholding.
//! Two one-pixel line gratings with the same interval are rendered, the
//! background one shifted by half a cycle, and each is kept only inside its
//! own mask. Where the masks meet, line ends abut instead of forming a
//! luminance edge.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::GrayImage;

/// Orientation of the grating lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    /// Horizontal lines; luminance varies along y.
    #[serde(rename = "h")]
    Horizontal,
    /// Vertical lines; luminance varies along x.
    #[serde(rename = "v")]
    Vertical,
    /// Lines running from upper left to lower right (`x - y` constant).
    #[serde(rename = "ul")]
    DiagUl,
    /// Lines running from upper right to lower left (`x + y` constant).
    #[serde(rename = "ur")]
    DiagUr,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::Horizontal,
        Direction::Vertical,
        Direction::DiagUl,
        Direction::DiagUr,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Direction::Horizontal => "h",
            Direction::Vertical => "v",
            Direction::DiagUl => "ul",
            Direction::DiagUr => "ur",
        }
    }

    /// Unit step that stays on the same grating line.
    pub fn along_line(self) -> (i64, i64) {
        match self {
            Direction::Horizontal => (1, 0),
            Direction::Vertical => (0, 1),
            Direction::DiagUl => (1, 1),
            Direction::DiagUr => (1, -1),
        }
    }

    /// The direction obtained by transposing the image.
    pub fn transposed(self) -> Self {
        match self {
            Direction::Horizontal => Direction::Vertical,
            Direction::Vertical => Direction::Horizontal,
            d => d,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "h" | "hor" | "horizontal" => Ok(Direction::Horizontal),
            "v" | "ver" | "vertical" => Ok(Direction::Vertical),
            "ul" | "diag_ul" => Ok(Direction::DiagUl),
            "ur" | "diag_ur" => Ok(Direction::DiagUr),
            other => Err(Error::param(format!("unknown grating direction `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    #[default]
    LinesWhiteOnBlack,
    LinesBlackOnWhite,
}

impl Polarity {
    pub fn line_value(self) -> f32 {
        match self {
            Polarity::LinesWhiteOnBlack => 1.0,
            Polarity::LinesBlackOnWhite => 0.0,
        }
    }

    pub fn ground_value(self) -> f32 {
        1.0 - self.line_value()
    }
}

/// Every free parameter of the corruption.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GratingSpec {
    pub direction: Direction,
    /// Grating period in pixels.
    pub interval: usize,
    /// Binarization threshold on `[0, 1]` luminance.
    pub threshold: f32,
    /// Phase of the figure grating, `0 <= figure_phase < interval`.
    pub figure_phase: usize,
    pub polarity: Polarity,
}

pub const DEFAULT_THRESHOLD: f32 = 0.5;

impl GratingSpec {
    /// Spec with threshold 0.5, figure phase 0 and white lines.
    pub fn new(direction: Direction, interval: usize) -> Self {
        Self {
            direction,
            interval,
            threshold: DEFAULT_THRESHOLD,
            figure_phase: 0,
            polarity: Polarity::default(),
        }
    }

    pub fn with_threshold(mut self, threshold: f32) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn with_figure_phase(mut self, phase: usize) -> Self {
        self.figure_phase = phase;
        self
    }

    pub fn with_polarity(mut self, polarity: Polarity) -> Self {
        self.polarity = polarity;
        self
    }

    /// Half a cycle away from the figure phase.
    pub fn background_phase(&self) -> usize {
        (self.figure_phase + self.interval / 2) % self.interval
    }

    /// Checks the parameters needed to render a single grating.
    pub fn validate_grating(&self) -> Result<()> {
        if self.interval < 2 {
            return Err(Error::param(format!("interval {} < 2", self.interval)));
        }
        if self.figure_phase >= self.interval {
            return Err(Error::param(format!(
                "figure phase {} must be below interval {}",
                self.figure_phase, self.interval
            )));
        }
        Ok(())
    }

    /// Checks everything the abutting composition needs, including an even
    /// interval so the half-cycle shift lands on the pixel grid.
    pub fn validate(&self) -> Result<()> {
        self.validate_grating()?;
        if !self.interval.is_multiple_of(2) {
            return Err(Error::param(format!(
                "odd interval {}: half-cycle shift is not on the pixel grid",
                self.interval
            )));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::param(format!("threshold {} outside (0, 1)", self.threshold)));
        }
        Ok(())
    }

    /// Directory-style name, e.g. `h_4`.
    pub fn condition_name(&self) -> String {
        format!("{}_{}", self.direction, self.interval)
    }
}

/// Position along the axis the grating varies on. Diagonal coordinates may
/// be negative; reduce with [`grating_phase`].
#[inline]
pub fn grating_coordinate(x: usize, y: usize, direction: Direction) -> i64 {
    let (x, y) = (x as i64, y as i64);
    match direction {
        Direction::Horizontal => y,
        Direction::Vertical => x,
        Direction::DiagUr => x + y,
        Direction::DiagUl => x - y,
    }
}

/// Non-negative remainder of the grating coordinate modulo `interval`.
#[inline]
pub fn grating_phase(x: usize, y: usize, direction: Direction, interval: usize) -> usize {
    grating_coordinate(x, y, direction).rem_euclid(interval as i64) as usize
}

/// Complementary figure/background partition of an image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskPair {
    width: usize,
    height: usize,
    figure: Vec<bool>,
    background: Vec<bool>,
}

impl MaskPair {
    pub fn from_figure(width: usize, height: usize, figure: Vec<bool>) -> Result<Self> {
        if figure.len() != width * height {
            return Err(Error::Shape(format!(
                "{width}x{height} mask needs {} cells, got {}",
                width * height,
                figure.len()
            )));
        }
        let background = figure.iter().map(|f| !f).collect();
        Ok(Self {
            width,
            height,
            figure,
            background,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn figure(&self) -> &[bool] {
        &self.figure
    }

    pub fn background(&self) -> &[bool] {
        &self.background
    }

    #[inline]
    pub fn is_figure(&self, x: usize, y: usize) -> bool {
        self.figure[y * self.width + x]
    }

    /// Pixels where the partition invariant fails (both or neither set).
    pub fn partition_violations(&self) -> usize {
        self.figure
            .iter()
            .zip(&self.background)
            .filter(|(f, b)| f == b)
            .count()
    }

    pub fn figure_count(&self) -> usize {
        self.figure.iter().filter(|&&f| f).count()
    }
}

/// Figure where `image > threshold`; a pixel exactly at threshold is
/// background.
pub fn binarize(image: &GrayImage, threshold: f32) -> MaskPair {
    binarize_with(image, threshold, false)
}

/// Like [`binarize`], but when `figure_is_dark` the figure is
/// `image < threshold` (black-on-white silhouettes). Ties stay background.
pub fn binarize_with(image: &GrayImage, threshold: f32, figure_is_dark: bool) -> MaskPair {
    let figure = image
        .data()
        .iter()
        .map(|&v| if figure_is_dark { v < threshold } else { v > threshold })
        .collect();
    MaskPair::from_figure(image.width(), image.height(), figure).expect("mask sized from image")
}

/// One-pixel-wide line grating: a pixel is on a line iff its grating
/// coordinate modulo the interval equals `phase`.
pub fn render_grating(width: usize, height: usize, spec: &GratingSpec, phase: usize) -> Result<GrayImage> {
    spec.validate_grating()?;
    if phase >= spec.interval {
        return Err(Error::param(format!(
            "phase {phase} must be below interval {}",
            spec.interval
        )));
    }
    let (line, ground) = (spec.polarity.line_value(), spec.polarity.ground_value());
    Ok(GrayImage::from_fn(width, height, |x, y| {
        if grating_phase(x, y, spec.direction, spec.interval) == phase {
            line
        } else {
            ground
        }
    }))
}

/// Joins the figure grating (at `figure_phase`) inside the figure mask with
/// the half-cycle-shifted background grating inside the background mask.
pub fn compose(masks: &MaskPair, spec: &GratingSpec) -> Result<GrayImage> {
    spec.validate()?;
    let (w, h) = masks.dims();
    let figure_grating = render_grating(w, h, spec, spec.figure_phase)?;
    let background_grating = render_grating(w, h, spec, spec.background_phase())?;
    let data = figure_grating
        .data()
        .iter()
        .zip(background_grating.data())
        .zip(masks.figure())
        .map(|((&f, &b), &in_figure)| if in_figure { f } else { b })
        .collect();
    GrayImage::new(w, h, data)
}

/// The corruption with the MNIST convention (bright figure on dark ground).
pub fn apply_abutting_grating(image: &GrayImage, spec: &GratingSpec) -> Result<GrayImage> {
    spec.validate()?;
    compose(&binarize(image, spec.threshold), spec)
}

/// The corruption with an explicit figure polarity.
pub fn apply_abutting_grating_with(image: &GrayImage, spec: &GratingSpec, figure_is_dark: bool) -> Result<GrayImage> {
    spec.validate()?;
    compose(&binarize_with(image, spec.threshold, figure_is_dark), spec)
}

/// Whether `(x, y)` lies on the grating line of its own region.
#[inline]
pub fn is_line_pixel(masks: &MaskPair, spec: &GratingSpec, x: usize, y: usize) -> bool {
    let phase = if masks.is_figure(x, y) {
        spec.figure_phase
    } else {
        spec.background_phase()
    };
    grating_phase(x, y, spec.direction, spec.interval) == phase
}

/// Classification of grating-line pixels relative to the mask boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinePixel {
    /// Not on a grating line.
    Off,
    /// On a line, with a neighbour along the line in the other region.
    End,
    /// On a line, both in-bounds neighbours along the line in the same region.
    Interior,
}

/// Per-pixel [`LinePixel`] classes, row-major.
pub fn classify_line_pixels(masks: &MaskPair, spec: &GratingSpec) -> Vec<LinePixel> {
    let (w, h) = masks.dims();
    let (dx, dy) = spec.direction.along_line();
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            if !is_line_pixel(masks, spec, x, y) {
                out.push(LinePixel::Off);
                continue;
            }
            let here = masks.is_figure(x, y);
            let crosses = [(dx, dy), (-dx, -dy)].iter().any(|&(sx, sy)| {
                let (nx, ny) = (x as i64 + sx, y as i64 + sy);
                nx >= 0
                    && ny >= 0
                    && (nx as usize) < w
                    && (ny as usize) < h
                    && masks.is_figure(nx as usize, ny as usize) != here
            });
            out.push(if crosses { LinePixel::End } else { LinePixel::Interior });
        }
    }
    out
}

/// Counts 8-connected pixel pairs that straddle the mask boundary, are both
/// off the grating lines, and still differ in `output` luminance. Zero means
/// the silhouette edge carries no contrast of its own.
pub fn edge_contrast_violations(output: &GrayImage, masks: &MaskPair, spec: &GratingSpec) -> usize {
    let (w, h) = masks.dims();
    let mut violations = 0;
    for y in 0..h {
        for x in 0..w {
            // Forward half of the 8-neighbourhood, so each pair is seen once.
            for (dx, dy) in [(1i64, 0i64), (-1, 1), (0, 1), (1, 1)] {
                let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                if nx < 0 || ny < 0 || nx as usize >= w || ny as usize >= h {
                    continue;
                }
                let (nx, ny) = (nx as usize, ny as usize);
                if masks.is_figure(x, y) == masks.is_figure(nx, ny) {
                    continue;
                }
                if is_line_pixel(masks, spec, x, y) || is_line_pixel(masks, spec, nx, ny) {
                    continue;
                }
                if output.get(x, y) != output.get(nx, ny) {
                    violations += 1;
                }
            }
        }
    }
    violations
}

/// Pixels of `output` not equal to the polarity's line or ground value.
pub fn non_binary_pixels(output: &GrayImage, polarity: Polarity) -> usize {
    let (line, ground) = (polarity.line_value(), polarity.ground_value());
    output.data().iter().filter(|&&v| v != line && v != ground).count()
}
