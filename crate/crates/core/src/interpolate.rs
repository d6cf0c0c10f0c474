//! Upsampling of low-resolution sources before corruption.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::GrayImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    Nearest,
    /// Corner-aligned: source corners land exactly on target corners.
    #[default]
    Bilinear,
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kernel::Nearest => "nearest",
            Kernel::Bilinear => "bilinear",
        })
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nearest" => Ok(Kernel::Nearest),
            "bilinear" => Ok(Kernel::Bilinear),
            other => Err(Error::param(format!("unknown interpolation kernel `{other}`"))),
        }
    }
}

/// Resizes `image` up to `target_width x target_height`.
///
/// Nearest maps target pixel `x` to source `floor(x * src / dst)`, which is
/// exact block replication at integer factors. Bilinear samples the source
/// at `x * (src - 1) / (dst - 1)`.
pub fn upsample(image: &GrayImage, target_width: usize, target_height: usize, kernel: Kernel) -> Result<GrayImage> {
    let (sw, sh) = image.dims();
    if target_width < sw || target_height < sh {
        return Err(Error::param(format!(
            "cannot downscale {sw}x{sh} to {target_width}x{target_height}"
        )));
    }
    if sw == 0 || sh == 0 {
        return Ok(GrayImage::filled(target_width, target_height, 0.0));
    }
    let out = match kernel {
        Kernel::Nearest => GrayImage::from_fn(target_width, target_height, |x, y| {
            image.get(x * sw / target_width, y * sh / target_height)
        }),
        Kernel::Bilinear => {
            let xs: Vec<_> = (0..target_width).map(|x| sample_axis(x, sw, target_width)).collect();
            let ys: Vec<_> = (0..target_height).map(|y| sample_axis(y, sh, target_height)).collect();
            GrayImage::from_fn(target_width, target_height, |x, y| {
                let (x0, x1, fx) = xs[x];
                let (y0, y1, fy) = ys[y];
                let top = image.get(x0, y0) * (1.0 - fx) + image.get(x1, y0) * fx;
                let bottom = image.get(x0, y1) * (1.0 - fx) + image.get(x1, y1) * fx;
                top * (1.0 - fy) + bottom * fy
            })
        }
    };
    Ok(out)
}

/// Corner-aligned source position of target index `i`: the two
/// neighbouring source indices and the weight of the second.
fn sample_axis(i: usize, src: usize, dst: usize) -> (usize, usize, f32) {
    if src == 1 || dst == 1 {
        return (0, 0, 0.0);
    }
    let num = i * (src - 1);
    let den = dst - 1;
    let i0 = num / den;
    let rem = num % den;
    if rem == 0 {
        (i0, i0, 0.0)
    } else {
        (i0, i0 + 1, rem as f32 / den as f32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mnist_to_hires_size() {
        let img = GrayImage::filled(28, 28, 0.25);
        for k in [Kernel::Nearest, Kernel::Bilinear] {
            let up = upsample(&img, 224, 224, k).unwrap();
            assert_eq!(up.dims(), (224, 224));
            assert!(up.data().iter().all(|&v| v == 0.25));
        }
    }

    #[test]
    fn downscale_is_rejected() {
        assert!(upsample(&GrayImage::filled(4, 4, 0.0), 3, 8, Kernel::Bilinear).is_err());
    }

    #[test]
    fn checkerboard_corners_survive_bilinear() {
        let board = GrayImage::new(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let up = upsample(&board, 4, 4, Kernel::Bilinear).unwrap();
        // Source-aligned target points under corner alignment: x, y in {0, 3}.
        assert_eq!(up.get(0, 0), 1.0);
        assert_eq!(up.get(3, 0), 0.0);
        assert_eq!(up.get(0, 3), 0.0);
        assert_eq!(up.get(3, 3), 1.0);
        // Closed form in between: f(u, v) = (1-u)(1-v) + u v at u = 1/3, v = 0.
        assert!((up.get(1, 0) - 2.0 / 3.0).abs() < 1e-6);
        assert!((up.get(1, 1) - (4.0 / 9.0 + 1.0 / 9.0)).abs() < 1e-6);
    }

    #[test]
    fn odd_factor_alignment_hits_source_points() {
        let img = GrayImage::from_fn(3, 1, |x, _| x as f32 / 2.0);
        let up = upsample(&img, 5, 1, Kernel::Bilinear).unwrap();
        let expect = [0.0, 0.25, 0.5, 0.75, 1.0];
        for (a, b) in up.data().iter().zip(expect) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    proptest! {
        #[test]
        fn nearest_integer_factor_is_block_replication(w in 1usize..8, h in 1usize..8, k in 1usize..5, px in proptest::collection::vec(0u8..=255, 64)) {
            let img = GrayImage::from_u8(w, h, &px[..w * h]).unwrap();
            let up = upsample(&img, w * k, h * k, Kernel::Nearest).unwrap();
            for y in 0..h * k {
                for x in 0..w * k {
                    prop_assert_eq!(up.get(x, y), img.get(x / k, y / k));
                }
            }
        }

        #[test]
        fn bilinear_stays_in_input_range(w in 1usize..8, h in 1usize..8, tw in 0usize..20, th in 0usize..20, px in proptest::collection::vec(0u8..=255, 64)) {
            let img = GrayImage::from_u8(w, h, &px[..w * h]).unwrap();
            let up = upsample(&img, w + tw, h + th, Kernel::Bilinear).unwrap();
            let lo = img.data().iter().cloned().fold(f32::INFINITY, f32::min);
            let hi = img.data().iter().cloned().fold(f32::NEG_INFINITY, f32::max);
            prop_assert!(up.data().iter().all(|&v| v >= lo - 1e-6 && v <= hi + 1e-6));
        }

        #[test]
        fn bilinear_keeps_rows_monotone(w in 2usize..8, tw in 0usize..20, mut px in proptest::collection::vec(0u8..=255, 8)) {
            px.truncate(w);
            px.sort_unstable();
            let img = GrayImage::from_u8(w, 2, &[px.clone(), px].concat()).unwrap();
            let up = upsample(&img, w + tw, 5, Kernel::Bilinear).unwrap();
            for y in 0..5 {
                for x in 1..up.width() {
                    prop_assert!(up.get(x, y) >= up.get(x - 1, y) - 1e-6);
                }
            }
        }
    }
}
