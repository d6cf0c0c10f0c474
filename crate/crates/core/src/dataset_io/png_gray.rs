use std::io::Cursor;
use std::path::Path;

use png::{BitDepth, ColorType, Transformations};

use crate::error::{Error, Result};
use crate::image::GrayImage;

/// Decodes a PNG into luminance. RGB(A) pixels become the unweighted mean
/// of their three colour channels; alpha is ignored. 16-bit and palette
/// images are reduced to 8-bit first.
pub fn load_png_gray(bytes: &[u8]) -> Result<GrayImage> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(Transformations::EXPAND | Transformations::STRIP_16);
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::format(format!("undecodable PNG: {e}")))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::format("PNG too large"))?;
    let mut buf = vec![0; size];
    let frame = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::format(format!("undecodable PNG: {e}")))?;
    if frame.bit_depth != BitDepth::Eight {
        return Err(Error::format(format!("unsupported PNG bit depth {:?}", frame.bit_depth)));
    }
    let (w, h) = (frame.width as usize, frame.height as usize);
    let pixels = &buf[..frame.buffer_size()];
    let stride = frame.line_size;
    let channels = match frame.color_type {
        ColorType::Grayscale => 1,
        ColorType::GrayscaleAlpha => 2,
        ColorType::Rgb => 3,
        ColorType::Rgba => 4,
        ColorType::Indexed => return Err(Error::format("palette PNG was not expanded")),
    };
    let mut data = Vec::with_capacity(w * h);
    for row in pixels.chunks(stride).take(h) {
        for px in row[..w * channels].chunks_exact(channels) {
            let v = if channels >= 3 {
                (f32::from(px[0]) + f32::from(px[1]) + f32::from(px[2])) / (3.0 * 255.0)
            } else {
                f32::from(px[0]) / 255.0
            };
            data.push(v.clamp(0.0, 1.0));
        }
    }
    GrayImage::new(w, h, data)
}

/// Encodes as 8-bit grayscale, non-interlaced.
pub fn write_png_gray(image: &GrayImage) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, image.width() as u32, image.height() as u32);
        encoder.set_color(ColorType::Grayscale);
        encoder.set_depth(BitDepth::Eight);
        let mut writer = encoder
            .write_header()
            .map_err(|e| Error::format(format!("PNG encode: {e}")))?;
        writer
            .write_image_data(&image.to_u8())
            .map_err(|e| Error::format(format!("PNG encode: {e}")))?;
        writer
            .finish()
            .map_err(|e| Error::format(format!("PNG encode: {e}")))?;
    }
    Ok(out)
}

pub fn read_png_file(path: &Path) -> Result<GrayImage> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    load_png_gray(&bytes).map_err(|e| match e {
        Error::Format(msg) => Error::format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn write_png_file(path: &Path, image: &GrayImage) -> Result<()> {
    let bytes = write_png_gray(image)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
