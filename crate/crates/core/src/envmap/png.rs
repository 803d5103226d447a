use std::path::Path;

use super::Image;
use crate::error::{Error, Result};
use crate::io_util::write_atomic;

/// Piecewise sRGB transfer for a linear value already in `[0, 1]`.
pub fn linear_to_srgb(x: f64) -> f64 {
    if x <= 0.0031308 {
        12.92 * x
    } else {
        1.055 * x.powf(1.0 / 2.4) - 0.055
    }
}

/// `clamp(linear · exposure, 0, 1)` through the sRGB curve, rounded to 8 bits.
pub fn srgb_byte(linear: f64, exposure: f64) -> u8 {
    let x = if linear.is_nan() { 0.0 } else { (linear * exposure).clamp(0.0, 1.0) };
    (linear_to_srgb(x) * 255.0).round() as u8
}

pub fn save_png_srgb(image: &Image, path: impl AsRef<Path>, exposure: f64) -> Result<()> {
    if !(exposure > 0.0 && exposure.is_finite()) {
        return Err(Error::InvalidArgument(format!("exposure must be positive, got {exposure}")));
    }
    let mut buf = Vec::with_capacity(image.width() * image.height() * 3);
    for p in image.pixels() {
        buf.extend([srgb_byte(p.r, exposure), srgb_byte(p.g, exposure), srgb_byte(p.b, exposure)]);
    }
    let rgb = image::RgbImage::from_raw(image.width() as u32, image.height() as u32, buf)
        .ok_or_else(|| Error::Image("pixel buffer size mismatch".into()))?;
    let mut encoded = std::io::Cursor::new(Vec::new());
    rgb.write_to(&mut encoded, image::ImageFormat::Png)
        .map_err(|e| Error::Image(e.to_string()))?;
    write_atomic(path.as_ref(), |w| Ok(w.write_all(encoded.get_ref())?))
}
