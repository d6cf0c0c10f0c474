//! Abutting-grating illusory-contour benchmark toolkit.
//!
//! Converts silhouette-style datasets (MNIST, upsampled MNIST, object
//! silhouettes) into abutting-grating stimuli, scores external model
//! predictions against them, probes the early layers of a convolutional
//! stem, and runs forced-choice human classification sessions.
//!
//! Pixel currency everywhere is [`GrayImage`]: row-major luminance in
//! `[0, 1]`. File formats quantize to 8 bits at the boundary.

pub mod benchgen;
pub mod dataset_io;
pub mod error;
pub mod grating;
pub mod image;
pub mod interpolate;
pub mod probe;
pub mod scoring;
pub mod study;
pub mod synth;

pub use error::{Error, Result};
pub use grating::{Direction, GratingSpec, MaskPair, Polarity};
pub use image::GrayImage;
pub use interpolate::Kernel;
