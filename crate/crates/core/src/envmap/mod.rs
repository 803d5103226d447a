//! Equirectangular environment maps and the image files they travel in.
//!
//! Direction convention (y up):
//!
//! ```text
//! v = acos(clamp(d.y, -1, 1)) / π            v = 0 at the north pole (+y)
//! u = fract(0.5 + atan2(d.x, -d.z) / (2π))   u = 0.5 looks down -z
//! ```
//!
//! At the exact poles `u` is arbitrary (whatever `atan2(0, 0)` yields).

mod hdr;
mod png;
mod rgbe;

pub use hdr::{load_hdr, read_hdr, save_hdr, write_hdr};
pub use png::{linear_to_srgb, save_png_srgb, srgb_byte};
pub use rgbe::{decode_rgbe, encode_rgbe};

use crate::error::{Error, Result};
use crate::math::{PixelRgb, Rgb, Vec3, PI};

/// A row-major grid of linear RGB pixels, row 0 at the top.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<Rgb>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<Rgb>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidMap(format!("empty image {width}x{height}")));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidMap(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        Ok(Image { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, value: Rgb) -> Self {
        assert!(width > 0 && height > 0);
        Image { width, height, pixels: vec![value; width * height] }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    #[inline]
    pub fn pixels_mut(&mut self) -> &mut [Rgb] {
        &mut self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Rgb {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, p: Rgb) {
        self.pixels[y * self.width + x] = p;
    }

    pub fn into_pixels(self) -> Vec<Rgb> {
        self.pixels
    }

    /// Scales every pixel by `k`.
    pub fn scaled(&self, k: f64) -> Image {
        Image {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&p| p * k).collect(),
        }
    }
}

/// Environment radiance on a 2:1 latitude-longitude grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RadianceMap {
    image: Image,
}

impl RadianceMap {
    /// Validates the 2:1 aspect and that every texel is finite and non-negative.
    pub fn new(width: usize, height: usize, texels: Vec<PixelRgb>) -> Result<Self> {
        Self::from_image(Image::new(width, height, texels)?)
    }

    pub fn from_image(image: Image) -> Result<Self> {
        if image.width != 2 * image.height || image.width < 2 {
            return Err(Error::InvalidMap(format!(
                "equirectangular map must be 2:1, got {}x{}",
                image.width, image.height
            )));
        }
        if let Some(i) = image.pixels.iter().position(|p| !p.is_valid_radiance()) {
            return Err(Error::InvalidMap(format!(
                "texel {i} is negative or non-finite: {:?}",
                image.pixels[i]
            )));
        }
        Ok(RadianceMap { image })
    }

    pub fn constant(width: usize, value: Rgb) -> Self {
        Self::new(width, width / 2, vec![value; width * (width / 2)])
            .expect("constant map with valid width")
    }

    /// Builds a map by evaluating `f` at every texel-center direction.
    pub fn from_fn(width: usize, f: impl Fn(Vec3) -> Rgb) -> Result<Self> {
        let height = width / 2;
        let mut texels = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                texels.push(f(texel_direction(width, height, col, row)));
            }
        }
        Self::new(width, height, texels)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.image.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.image.height
    }

    #[inline]
    pub fn texels(&self) -> &[Rgb] {
        &self.image.pixels
    }

    #[inline]
    pub fn texel(&self, col: usize, row: usize) -> Rgb {
        self.image.get(col, row)
    }

    pub fn image(&self) -> &Image {
        &self.image
    }

    pub fn into_image(self) -> Image {
        self.image
    }

    /// Direction through the center of texel `(col, row)`.
    pub fn texel_center(&self, col: usize, row: usize) -> Vec3 {
        texel_direction(self.width(), self.height(), col, row)
    }

    /// Nearest texel to `d`.
    pub fn sample_nearest(&self, d: Vec3) -> Rgb {
        let (u, v) = dir_to_uv(d);
        let col = ((u * self.width() as f64) as usize).min(self.width() - 1);
        let row = ((v * self.height() as f64) as usize).min(self.height() - 1);
        self.texel(col, row)
    }

    /// Bilinear lookup in uv with horizontal wrap and vertical clamp.
    pub fn sample_bilinear(&self, d: Vec3) -> Rgb {
        let (u, v) = dir_to_uv(d);
        let (w, h) = (self.width(), self.height());
        let x = u * w as f64 - 0.5;
        let y = (v * h as f64 - 0.5).clamp(0.0, (h - 1) as f64);
        let x0f = x.floor();
        let y0f = y.floor();
        let fx = x - x0f;
        let fy = y - y0f;
        let x0 = (x0f as i64).rem_euclid(w as i64) as usize;
        let x1 = (x0 + 1) % w;
        let y0 = y0f as usize;
        let y1 = (y0 + 1).min(h - 1);
        let top = self.texel(x0, y0) * (1.0 - fx) + self.texel(x1, y0) * fx;
        let bottom = self.texel(x0, y1) * (1.0 - fx) + self.texel(x1, y1) * fx;
        top * (1.0 - fy) + bottom * fy
    }

    /// Solid angle of one texel in `row`.
    pub fn texel_solid_angle(&self, row: usize) -> f64 {
        texel_solid_angle(self.width(), self.height(), row)
    }

    pub fn scaled(&self, k: f64) -> RadianceMap {
        RadianceMap { image: self.image.scaled(k) }
    }
}

impl TryFrom<Image> for RadianceMap {
    type Error = Error;
    fn try_from(image: Image) -> Result<Self> {
        RadianceMap::from_image(image)
    }
}

/// Maps a unit direction to equirectangular coordinates.
pub fn dir_to_uv(d: Vec3) -> (f64, f64) {
    let v = d.y.clamp(-1.0, 1.0).acos() / PI;
    let mut u = 0.5 + d.x.atan2(-d.z) / (2.0 * PI);
    u -= u.floor();
    // fract can round up to exactly 1.0 for tiny negative inputs
    if u >= 1.0 {
        u = 0.0;
    }
    (u, v)
}

/// Inverse of [`dir_to_uv`] away from the poles.
pub fn uv_to_dir(u: f64, v: f64) -> Vec3 {
    let theta = v * PI;
    let phi = (u - 0.5) * 2.0 * PI;
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Vec3::new(st * sp, ct, -st * cp)
}

fn texel_direction(width: usize, height: usize, col: usize, row: usize) -> Vec3 {
    uv_to_dir(
        (col as f64 + 0.5) / width as f64,
        (row as f64 + 0.5) / height as f64,
    )
}

/// `(2π / width) · (cos θ_top − cos θ_bottom)` for the polar band of `row`.
pub fn texel_solid_angle(width: usize, height: usize, row: usize) -> f64 {
    assert!(row < height, "row {row} out of range for height {height}");
    let top = PI * row as f64 / height as f64;
    let bottom = PI * (row + 1) as f64 / height as f64;
    2.0 * PI / width as f64 * (top.cos() - bottom.cos())
}
