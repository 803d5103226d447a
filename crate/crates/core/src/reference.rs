//! Brute-force Monte Carlo evaluation of the reflectance equation.
//!
//! The diffuse term is estimated with cosine-weighted directions and the
//! specular term with GGX half vectors, one of each per sample; both share
//! the Fresnel and `k_d` chain of the split-sum path.

use std::sync::atomic::AtomicUsize;

use rayon::prelude::*;

use crate::brdf::{cook_torrance_fs_rough_fresnel, diffuse_weight, fresnel_f0, fresnel_roughness, ggx_half_vector_local, ggx_ndf};
use crate::envmap::RadianceMap;
use crate::error::{Error, Result};
use crate::geometry::{Bvh, SurfacePoint};
use crate::math::{Rgb, Vec3};
use crate::sampling::{cos_hemisphere, Onb, RngStream, RHO_MIN};
use crate::scene::Scene;
use crate::shading::{finish, primary_hit, Background, Camera, Render};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReflectanceMode {
    #[default]
    Full,
    Diffuse,
    Specular,
}

impl ReflectanceMode {
    fn diffuse(self) -> bool {
        self != ReflectanceMode::Specular
    }

    fn specular(self) -> bool {
        self != ReflectanceMode::Diffuse
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReflectanceOptions {
    pub mode: ReflectanceMode,
    /// Replaces the `(1 − m)(1 − F_r)` diffuse weight.
    pub kd_override: Option<Rgb>,
}

/// Estimate with the standard error of the mean per channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectanceEstimate {
    pub value: Rgb,
    pub std_err: Rgb,
}

/// One sample of the reflected radiance toward `wo`.
fn sample_once(
    point: &SurfacePoint,
    wo: Vec3,
    env: &RadianceMap,
    bvh: Option<&Bvh>,
    t_min: f64,
    kd: Rgb,
    opts: &ReflectanceOptions,
    rng: &mut RngStream,
) -> Rgb {
    let n = point.normal;
    let m = &point.material;
    let visible = |d: Vec3| bvh.is_none_or(|b| !b.occluded(point.position, d, t_min));
    let mut l = Rgb::BLACK;
    if opts.mode.diffuse() {
        // (k_d a / π) L cos / (cos / π)
        let d = cos_hemisphere(n, rng).dir;
        if d.dot(n) > 0.0 && visible(d) {
            l += kd * m.albedo * env.sample_bilinear(d);
        }
    }
    if opts.mode.specular() {
        let rho = m.roughness.max(RHO_MIN);
        let (u1, u2) = rng.uniform2();
        let h = Onb::from_normal(n).to_world(ggx_half_vector_local(u1, u2, rho));
        let oh = wo.dot(h);
        let wi = h * (2.0 * oh) - wo;
        let cos_i = wi.dot(n);
        if oh > 0.0 && cos_i > 0.0 {
            let pdf = ggx_ndf(h.dot(n), rho) * h.dot(n) / (4.0 * oh);
            if pdf > 0.0 && visible(wi) {
                l += cook_torrance_fs_rough_fresnel(wi, wo, n, m) * env.sample_bilinear(wi) * (cos_i / pdf);
            }
        }
    }
    l
}

/// Reflected radiance toward `wo` with its standard error. Visibility is
/// ignored when `bvh` is `None`.
#[allow(clippy::too_many_arguments)]
pub fn mc_reflectance_stats(
    point: &SurfacePoint,
    wo: Vec3,
    env: &RadianceMap,
    bvh: Option<&Bvh>,
    samples: usize,
    t_min: f64,
    opts: &ReflectanceOptions,
    rng: &mut RngStream,
) -> Result<ReflectanceEstimate> {
    if samples == 0 {
        return Err(Error::InvalidArgument("reflectance needs at least one sample".into()));
    }
    let n = point.normal;
    let cos_nv = n.dot(wo);
    if cos_nv <= 0.0 {
        return Err(Error::InvalidArgument("view direction is below the surface".into()));
    }
    let m = &point.material;
    let kd = opts.kd_override.unwrap_or_else(|| {
        diffuse_weight(m.metalness, fresnel_roughness(fresnel_f0(m.metalness, m.albedo), m.roughness, cos_nv))
    });
    let mut sum = Rgb::BLACK;
    let mut sum_sq = Rgb::BLACK;
    for _ in 0..samples {
        let l = sample_once(point, wo, env, bvh, t_min, kd, opts, rng);
        sum += l;
        sum_sq += l * l;
    }
    let k = samples as f64;
    let mean = sum / k;
    let std_err = if samples > 1 {
        (sum_sq / k - mean * mean).map(|v| (v.max(0.0) * k / (k - 1.0) / k).sqrt())
    } else {
        Rgb::BLACK
    };
    Ok(ReflectanceEstimate { value: mean, std_err })
}

#[allow(clippy::too_many_arguments)]
pub fn mc_reflectance(
    point: &SurfacePoint,
    wo: Vec3,
    env: &RadianceMap,
    bvh: Option<&Bvh>,
    samples: usize,
    t_min: f64,
    opts: &ReflectanceOptions,
    rng: &mut RngStream,
) -> Result<Rgb> {
    mc_reflectance_stats(point, wo, env, bvh, samples, t_min, opts, rng).map(|e| e.value)
}

#[derive(Debug, Clone, Copy)]
pub struct ReferenceOptions<'a> {
    pub samples_per_pixel: usize,
    /// Trace shadow rays against the scene.
    pub visibility: bool,
    pub reflectance: ReflectanceOptions,
    pub background: Background<'a>,
    pub seed: u64,
}

/// Oracle image: per-pixel [`mc_reflectance`] at the primary hit, pixel
/// `i` drawing from stream `i`.
pub fn render_reference(scene: &Scene, camera: &Camera, env: &RadianceMap, opts: &ReferenceOptions) -> Result<Render> {
    camera.validate()?;
    if opts.samples_per_pixel == 0 {
        return Err(Error::InvalidArgument("samples per pixel must be at least 1".into()));
    }
    let bvh = opts.visibility.then(|| scene.bvh());
    let pixel = |i: usize| -> Result<(Rgb, bool)> {
        let dir = camera.ray_dir(i % camera.width, i / camera.width);
        let Some((point, wo)) = primary_hit(scene, camera.position, dir) else {
            return Ok((opts.background.radiance(dir), false));
        };
        if point.normal.dot(wo) <= 0.0 {
            return Ok((Rgb::BLACK, true));
        }
        let mut rng = RngStream::new(opts.seed, i as u64);
        let l = mc_reflectance(&point, wo, env, bvh, opts.samples_per_pixel, scene.t_min(), &opts.reflectance, &mut rng)?;
        Ok((l, true))
    };
    finish(camera, (0..camera.width * camera.height).into_par_iter().map(pixel).collect(), AtomicUsize::new(0))
}
