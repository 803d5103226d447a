//! Split-sum image-based lighting.

pub mod brdf;
pub mod envmap;
pub mod geometry;
pub mod illum_field;
pub mod error;
pub mod fixtures;
pub mod io_util;
pub mod math;
pub mod metrics;
pub mod mlp;
pub mod occlusion;
pub mod prefilter;
pub mod reference;
pub mod sampling;
pub mod scene;
pub mod shading;

pub use error::{Error, Result};
pub use math::{PixelRgb, Rgb, Vec3};
