//! Split-sum shading of surface points and image rendering.
//!
//! Specular radiance is `ĝ(ω_r, ρ) (F_r F1 + F2)`, diffuse radiance is
//! `ĝ(n, 1) k_d a`, and the two are modulated by the occlusion factors
//! before the optional sRGB transfer.

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;

use crate::brdf::{diffuse_weight, fresnel_f0, fresnel_roughness, BrdfLut};
use crate::envmap::linear_to_srgb;
use crate::envmap::{Image, RadianceMap};
use crate::error::{Error, Result};
use crate::geometry::{shading_frame, Ray, SurfacePoint};
use crate::illum_field::IllumField;
use crate::math::{Rgb, Vec3};
use crate::occlusion::{estimate_occlusion, OcclusionPair, OcclusionTable};
use crate::prefilter::{draw_light_samples, mc_prefilter, LightSample, PrefilteredPyramid};
use crate::sampling::RngStream;
use crate::scene::Scene;

/// Pinhole camera with a vertical field of view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub position: Vec3,
    pub look_at: Vec3,
    pub up: Vec3,
    pub fov_y: f64,
    pub width: usize,
    pub height: usize,
}

impl Camera {
    pub fn new(position: Vec3, look_at: Vec3, up: Vec3, fov_y: f64, width: usize, height: usize) -> Result<Self> {
        let cam = Camera { position, look_at, up, fov_y, width, height };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fov_y > 0.0 && self.fov_y < std::f64::consts::PI) {
            return Err(Error::InvalidArgument(format!("field of view {} outside (0, π)", self.fov_y)));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidArgument("image size must be at least 1×1".into()));
        }
        let fwd = self.look_at - self.position;
        if !(fwd.length() > 0.0) || !(fwd.normalize().cross(self.up).length() > 1e-9) {
            return Err(Error::InvalidArgument("degenerate camera orientation".into()));
        }
        Ok(())
    }

    fn basis(&self) -> (Vec3, Vec3, Vec3) {
        let fwd = (self.look_at - self.position).normalize();
        let right = fwd.cross(self.up).normalize();
        let up = right.cross(fwd);
        (fwd, right, up)
    }

    /// Unit direction through the center of pixel `(x, y)`, row 0 at the top.
    pub fn ray_dir(&self, x: usize, y: usize) -> Vec3 {
        let (fwd, right, up) = self.basis();
        let t = (0.5 * self.fov_y).tan();
        let aspect = self.width as f64 / self.height as f64;
        let sx = (2.0 * (x as f64 + 0.5) / self.width as f64 - 1.0) * t * aspect;
        let sy = (1.0 - 2.0 * (y as f64 + 0.5) / self.height as f64) * t;
        (fwd + right * sx + up * sy).normalize()
    }
}

/// Where pre-integrated illumination `ĝ(ω, ρ)` comes from.
#[derive(Debug, Clone)]
pub enum IllumSource {
    Pyramid(PrefilteredPyramid),
    Field(IllumField),
    /// Ratio estimates over one fixed set of light samples.
    DirectMc { env: RadianceMap, samples: Vec<LightSample> },
}

impl IllumSource {
    /// Direct estimation with `count` uniform light samples drawn from `seed`.
    pub fn direct_mc(env: RadianceMap, count: usize, seed: u64) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidArgument("direct illumination needs at least one sample".into()));
        }
        let samples = draw_light_samples(&env, count, &mut RngStream::new(seed, 0));
        Ok(IllumSource::DirectMc { env, samples })
    }

    pub fn prefiltered(&self, dir: Vec3, rho: f64) -> Result<Rgb> {
        match self {
            IllumSource::Pyramid(p) => Ok(p.lookup(dir, rho)),
            IllumSource::Field(f) => f.forward(dir, rho),
            IllumSource::DirectMc { env, samples } => mc_prefilter(env, dir, rho, samples),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            IllumSource::Pyramid(_) => "pyramid",
            IllumSource::Field(_) => "field",
            IllumSource::DirectMc { .. } => "mc",
        }
    }
}

/// Which terms contribute to shaded radiance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShadeTerms {
    pub diffuse: bool,
    pub specular: bool,
}

impl ShadeTerms {
    pub const ALL: ShadeTerms = ShadeTerms { diffuse: true, specular: true };
    pub const DIFFUSE: ShadeTerms = ShadeTerms { diffuse: true, specular: false };
    pub const SPECULAR: ShadeTerms = ShadeTerms { diffuse: false, specular: true };
}

impl Default for ShadeTerms {
    fn default() -> Self {
        ShadeTerms::ALL
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputMode {
    #[default]
    Linear,
    Srgb,
}

fn f_r(point: &SurfacePoint, cos_nv: f64) -> Rgb {
    let m = &point.material;
    fresnel_roughness(fresnel_f0(m.metalness, m.albedo), m.roughness, cos_nv)
}

/// Specular split-sum radiance; zero for a back-facing view.
pub fn shade_specular(point: &SurfacePoint, wo: Vec3, illum: &IllumSource, lut: &BrdfLut) -> Result<Rgb> {
    let n = point.normal;
    let cos_nv = n.dot(wo);
    if cos_nv <= 0.0 {
        return Ok(Rgb::BLACK);
    }
    let wr = wo.reflect(n);
    let rho = point.material.roughness;
    let g = illum.prefiltered(wr, rho)?;
    let (f1, f2) = lut.lookup(cos_nv, rho);
    Ok(g * (f_r(point, cos_nv) * f1 + Rgb::splat(f2)))
}

/// Diffuse split-sum radiance `ĝ(n, 1) k_d a`.
pub fn shade_diffuse(point: &SurfacePoint, wo: Vec3, illum: &IllumSource) -> Result<Rgb> {
    let n = point.normal;
    let m = &point.material;
    let kd = diffuse_weight(m.metalness, f_r(point, n.dot(wo).max(0.0)));
    if kd.max_channel() == 0.0 || m.albedo.max_channel() == 0.0 {
        return Ok(Rgb::BLACK);
    }
    Ok(illum.prefiltered(n, 1.0)? * kd * m.albedo)
}

/// `ô_d L̂_d + ô_s L̂_s`, through the sRGB curve in [`OutputMode::Srgb`].
pub fn shade(
    point: &SurfacePoint,
    wo: Vec3,
    illum: &IllumSource,
    lut: &BrdfLut,
    occlusion: &OcclusionPair,
    terms: ShadeTerms,
    output: OutputMode,
) -> Result<Rgb> {
    let mut l = Rgb::BLACK;
    if terms.diffuse {
        l += occlusion.o_d * shade_diffuse(point, wo, illum)?;
    }
    if terms.specular {
        l += occlusion.o_s * shade_specular(point, wo, illum, lut)?;
    }
    Ok(match output {
        OutputMode::Linear => l,
        OutputMode::Srgb => l.map(|x| linear_to_srgb(x.clamp(0.0, 1.0))),
    })
}

/// What miss pixels show.
#[derive(Debug, Clone, Copy)]
pub enum Background<'a> {
    Env(&'a RadianceMap),
    Black,
}

impl Background<'_> {
    pub fn radiance(&self, dir: Vec3) -> Rgb {
        match self {
            Background::Env(env) => env.sample_bilinear(dir),
            Background::Black => Rgb::BLACK,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum OcclusionMode<'a> {
    None,
    /// Estimated per pixel against the scene itself.
    Mc { env: &'a RadianceMap, samples: usize },
    Baked(&'a OcclusionTable),
}

/// A rendered image with its geometry coverage.
#[derive(Debug, Clone, PartialEq)]
pub struct Render {
    pub image: Image,
    pub coverage: Vec<bool>,
    /// Hits whose view direction ended up behind the shading normal.
    pub back_facing: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct RenderOptions<'a> {
    pub occlusion: OcclusionMode<'a>,
    pub background: Background<'a>,
    pub terms: ShadeTerms,
    pub seed: u64,
}

/// Renders through the split-sum path with one primary ray per pixel
/// center. Pixel `i` (row-major) draws from stream `i`.
pub fn render(scene: &Scene, camera: &Camera, illum: &IllumSource, lut: &BrdfLut, opts: &RenderOptions) -> Result<Render> {
    camera.validate()?;
    let back = AtomicUsize::new(0);
    let pixel = |i: usize| -> Result<(Rgb, bool)> {
        let (x, y) = (i % camera.width, i / camera.width);
        let dir = camera.ray_dir(x, y);
        let Some((point, wo)) = primary_hit(scene, camera.position, dir) else {
            return Ok((opts.background.radiance(dir), false));
        };
        if point.normal.dot(wo) <= 0.0 {
            back.fetch_add(1, Ordering::Relaxed);
            return Ok((Rgb::BLACK, true));
        }
        let occ = match opts.occlusion {
            OcclusionMode::None => OcclusionPair { o_d: Rgb::WHITE, o_s: Rgb::WHITE },
            OcclusionMode::Mc { env, samples } => {
                let mut rng = RngStream::new(opts.seed, i as u64);
                let e = estimate_occlusion(&point, env, Some(scene.bvh()), samples, scene.t_min(), &mut rng)?;
                OcclusionPair::from(&e)
            }
            OcclusionMode::Baked(table) => table.lookup(point.position),
        };
        Ok((shade(&point, wo, illum, lut, &occ, opts.terms, OutputMode::Linear)?, true))
    };
    finish(camera, (0..camera.width * camera.height).into_par_iter().map(pixel).collect(), back)
}

pub(crate) fn finish(camera: &Camera, px: Result<Vec<(Rgb, bool)>>, back: AtomicUsize) -> Result<Render> {
    let (pixels, coverage): (Vec<Rgb>, Vec<bool>) = px?.into_iter().unzip();
    Ok(Render {
        image: Image::new(camera.width, camera.height, pixels)?,
        coverage,
        back_facing: back.into_inner(),
    })
}

/// Nearest hit along a primary ray as a shading point and the direction
/// back toward the eye.
pub fn primary_hit(scene: &Scene, origin: Vec3, dir: Vec3) -> Option<(SurfacePoint, Vec3)> {
    let hit = scene.bvh().intersect(&Ray::from(origin, dir, 0.0))?;
    let mesh = scene.bvh().mesh();
    let wo = -dir;
    let (n, _) = shading_frame(mesh, &hit, wo);
    let point = SurfacePoint {
        position: mesh.point_at(hit.triangle, hit.u, hit.v),
        normal: n,
        material: scene.materials().at(mesh, hit.triangle, hit.u, hit.v),
    };
    Some((point, wo))
}
