use crate::error::{Error, Result};
use crate::grating::{classify_line_pixels, GratingSpec, LinePixel, MaskPair};
use crate::image::GrayImage;

/// Quantifies end-stopped behaviour of an activation map on a stimulus.
///
/// Activations are measured as deviation from the map's mean, so the score
/// is unchanged by adding a constant to the map. The score is the mean
/// absolute deviation on grating line ends (line pixels whose neighbour
/// along the line lies in the other mask region) minus the same quantity on
/// interior line pixels. Positive means line ends respond more strongly
/// than line interiors, whether by activation or depression.
pub fn end_stopping_score(map: &GrayImage, spec: &GratingSpec, masks: &MaskPair) -> Result<f64> {
    if map.dims() != masks.dims() {
        return Err(Error::Shape(format!(
            "map is {}x{} but masks are {}x{}",
            map.width(),
            map.height(),
            masks.width(),
            masks.height()
        )));
    }
    spec.validate()?;
    let n = map.data().len() as f64;
    let baseline = map.data().iter().map(|&v| f64::from(v)).sum::<f64>() / n;
    let (mut end_sum, mut end_n, mut int_sum, mut int_n) = (0.0, 0usize, 0.0, 0usize);
    for (class, &v) in classify_line_pixels(masks, spec).iter().zip(map.data()) {
        let dev = (f64::from(v) - baseline).abs();
        match class {
            LinePixel::End => {
                end_sum += dev;
                end_n += 1;
            }
            LinePixel::Interior => {
                int_sum += dev;
                int_n += 1;
            }
            LinePixel::Off => {}
        }
    }
    if end_n == 0 {
        return Err(Error::param("no grating line ends on the mask boundary"));
    }
    if int_n == 0 {
        return Err(Error::param("no interior grating line pixels"));
    }
    Ok(end_sum / end_n as f64 - int_sum / int_n as f64)
}
