//! Image comparison: mean squared error and PSNR, optionally after a
//! per-channel least-squares scale of the second image.

use crate::envmap::Image;
use crate::error::{Error, Result};
use crate::math::Rgb;

/// Result of comparing a reference image `a` with a candidate `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    /// Per-channel factors applied to `b`; all 1 without channel scaling.
    pub scales: [f64; 3],
    pub mse: f64,
    /// Largest channel value of `a`.
    pub peak: f64,
    /// `10 log10(peak² / mse)`; `f64::INFINITY` when the images agree exactly.
    pub psnr: f64,
}

/// `s_c = Σ a_c b_c / Σ b_c²` over the selected pixels; 1 where `b_c` is all zero.
pub fn channel_scales(a: &Image, b: &Image, mask: Option<&[bool]>) -> Result<[f64; 3]> {
    check_dims(a, b, mask)?;
    let mut ab = [0.0; 3];
    let mut bb = [0.0; 3];
    for (i, (pa, pb)) in a.pixels().iter().zip(b.pixels()).enumerate() {
        if mask.is_some_and(|m| !m[i]) {
            continue;
        }
        for c in 0..3 {
            ab[c] += pa[c] * pb[c];
            bb[c] += pb[c] * pb[c];
        }
    }
    Ok(std::array::from_fn(|c| if bb[c] > 0.0 { ab[c] / bb[c] } else { 1.0 }))
}

pub fn compare(a: &Image, b: &Image, channel_scale: bool) -> Result<Comparison> {
    compare_masked(a, b, channel_scale, None)
}

/// Like [`compare`] but restricted to pixels where `mask` is true.
pub fn compare_masked(a: &Image, b: &Image, channel_scale: bool, mask: Option<&[bool]>) -> Result<Comparison> {
    check_dims(a, b, mask)?;
    let scales = if channel_scale { channel_scales(a, b, mask)? } else { [1.0; 3] };
    let s = Rgb::from_array(scales);
    let mut sum = 0.0;
    let mut n = 0usize;
    let mut peak: f64 = 0.0;
    for (i, (pa, pb)) in a.pixels().iter().zip(b.pixels()).enumerate() {
        if mask.is_some_and(|m| !m[i]) {
            continue;
        }
        sum += pa.distance_squared(*pb * s);
        peak = peak.max(pa.max_channel());
        n += 3;
    }
    if n == 0 {
        return Err(Error::InvalidArgument("comparison mask selects no pixels".into()));
    }
    let mse = sum / n as f64;
    let psnr = if mse == 0.0 { f64::INFINITY } else { 10.0 * (peak * peak / mse).log10() };
    Ok(Comparison { scales, mse, peak, psnr })
}

pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    Ok(compare(a, b, false)?.psnr)
}

fn check_dims(a: &Image, b: &Image, mask: Option<&[bool]>) -> Result<()> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    if let Some(m) = mask {
        if m.len() != a.pixels().len() {
            return Err(Error::LengthMismatch(format!("mask of {} for {} pixels", m.len(), a.pixels().len())));
        }
    }
    Ok(())
}
