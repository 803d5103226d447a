//! Pre-integrated illumination `g(ω_r, ρ)` from an environment map.
//!
//! The estimator is the shared-sample ratio
//! `ḡ = Σ D(t_i, ρ) L_i ⟨ω_i, ω_r⟩⁺ / Σ D(t_i, ρ) ⟨ω_i, ω_r⟩⁺` over
//! uniform-sphere light samples, using the simplified GGX distribution.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::brdf::ggx_ndf_simplified;
use crate::envmap::{load_hdr, save_hdr, RadianceMap};
use crate::error::{Error, Result};
use crate::io_util::write_atomic;
use crate::math::{Rgb, Vec3, INV_PI};
use crate::sampling::{uniform_sphere, RngStream, RHO_MIN};

pub const DEFAULT_LIGHT_SAMPLES: usize = 8192;
pub const DEFAULT_PYRAMID_LEVELS: usize = 6;

/// Denominators at or below this make the ratio estimator an error.
pub const MIN_DENOMINATOR: f64 = 1e-12;

/// One shared light sample: a direction and the radiance seen along it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LightSample {
    pub dir: Vec3,
    pub radiance: Rgb,
}

/// `count` uniform-sphere directions with bilinear environment radiance.
pub fn draw_light_samples(env: &RadianceMap, count: usize, rng: &mut RngStream) -> Vec<LightSample> {
    (0..count)
        .map(|_| {
            let dir = uniform_sphere(rng).dir;
            LightSample { dir, radiance: env.sample_bilinear(dir) }
        })
        .collect()
}

/// The ratio estimator over an arbitrary shared sample set.
pub fn ratio_estimate(samples: &[LightSample], axis: Vec3, rho: f64) -> Result<Rgb> {
    let mut num = Rgb::BLACK;
    let mut den = 0.0;
    for s in samples {
        let t = s.dir.dot(axis);
        if t <= 0.0 {
            continue;
        }
        let w = ggx_ndf_simplified(t, rho) * t;
        num += s.radiance * w;
        den += w;
    }
    if !(den > MIN_DENOMINATOR) {
        return Err(Error::DegenerateEstimator(den));
    }
    Ok(num / den)
}

/// `ḡ(ω_r, ρ)`; for `ρ < RHO_MIN` this is the bilinear environment value.
pub fn mc_prefilter(env: &RadianceMap, axis: Vec3, rho: f64, samples: &[LightSample]) -> Result<Rgb> {
    if rho < RHO_MIN {
        return Ok(env.sample_bilinear(axis));
    }
    ratio_estimate(samples, axis, rho.min(1.0))
}

/// `(1/π) ∫ L(ω) ⟨ω, n⟩⁺ dω` summed over every texel with its solid angle.
pub fn diffuse_irradiance_quadrature(env: &RadianceMap, n: Vec3) -> Rgb {
    let mut acc = Rgb::BLACK;
    for row in 0..env.height() {
        let dw = env.texel_solid_angle(row);
        for col in 0..env.width() {
            let c = env.texel_center(col, row).dot(n);
            if c > 0.0 {
                acc += env.texel(col, row) * (c * dw);
            }
        }
    }
    acc * INV_PI
}

/// The same integral through the ratio estimator at `ρ = 1`.
pub fn diffuse_irradiance_mc(samples: &[LightSample], n: Vec3) -> Result<Rgb> {
    ratio_estimate(samples, n, 1.0)
}

/// Environment prefiltered at a ladder of roughness values.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefilteredPyramid {
    levels: Vec<(f64, RadianceMap)>,
}

/// Settings for [`bake_pyramid`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PyramidConfig {
    pub levels: usize,
    pub samples_per_texel: usize,
    /// Width of the prefiltered levels; `None` keeps the input width.
    pub level_width: Option<usize>,
    pub seed: u64,
}

impl Default for PyramidConfig {
    fn default() -> Self {
        PyramidConfig {
            levels: DEFAULT_PYRAMID_LEVELS,
            samples_per_texel: DEFAULT_LIGHT_SAMPLES,
            level_width: None,
            seed: 0,
        }
    }
}

impl PrefilteredPyramid {
    pub fn new(levels: Vec<(f64, RadianceMap)>) -> Result<Self> {
        if levels.len() < 2 {
            return Err(Error::InvalidArgument("pyramid needs at least 2 levels".into()));
        }
        if levels[0].0 != 0.0 || levels[levels.len() - 1].0 != 1.0 {
            return Err(Error::InvalidArgument("pyramid roughness must span [0, 1]".into()));
        }
        if levels.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::InvalidArgument("pyramid roughness must increase".into()));
        }
        Ok(PrefilteredPyramid { levels })
    }

    pub fn levels(&self) -> &[(f64, RadianceMap)] {
        &self.levels
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    /// Bilinear within the bracketing levels, linear across roughness.
    pub fn lookup(&self, dir: Vec3, rho: f64) -> Rgb {
        let rho = rho.clamp(0.0, 1.0);
        let k = self.levels.partition_point(|(r, _)| *r <= rho).clamp(1, self.levels.len() - 1);
        let (r0, m0) = &self.levels[k - 1];
        let (r1, m1) = &self.levels[k];
        let f = ((rho - r0) / (r1 - r0)).clamp(0.0, 1.0);
        if f == 0.0 {
            return m0.sample_bilinear(dir);
        }
        if f == 1.0 {
            return m1.sample_bilinear(dir);
        }
        m0.sample_bilinear(dir) * (1.0 - f) + m1.sample_bilinear(dir) * f
    }

    /// Writes `level_XX.hdr` files and `pyramid.txt` into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(Error::io_at(dir))?;
        let mut meta = format!("levels {}\n", self.levels.len());
        for (k, (rho, map)) in self.levels.iter().enumerate() {
            let name = level_file_name(k);
            save_hdr(map.image(), dir.join(&name))?;
            writeln!(meta, "level {k} {rho} {name}").expect("string write");
        }
        write_atomic(&dir.join(METADATA_FILE), |w| Ok(w.write_all(meta.as_bytes())?))
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let meta_path = dir.join(METADATA_FILE);
        let text = std::fs::read_to_string(&meta_path).map_err(Error::io_at(&meta_path))?;
        let bad = |line: usize, msg: &str| Error::Parse { line, message: msg.to_string() };
        let mut count = None;
        let mut levels = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let parts: Vec<&str> = line.split_whitespace().collect();
            match parts.as_slice() {
                [] => {}
                ["levels", n] => count = Some(n.parse::<usize>().map_err(|_| bad(i + 1, "bad level count"))?),
                ["level", _, rho, file] => {
                    let rho: f64 = rho.parse().map_err(|_| bad(i + 1, "bad roughness"))?;
                    let path: PathBuf = dir.join(file);
                    levels.push((rho, RadianceMap::from_image(load_hdr(&path)?)?));
                }
                _ => return Err(bad(i + 1, "unrecognized record")),
            }
        }
        if count != Some(levels.len()) {
            return Err(Error::Format(format!(
                "metadata declares {count:?} levels, found {}",
                levels.len()
            )));
        }
        PrefilteredPyramid::new(levels)
    }
}

pub const METADATA_FILE: &str = "pyramid.txt";

fn level_file_name(k: usize) -> String {
    format!("level_{k:02}.hdr")
}

/// Roughness of level `k` out of `count`: `k / (count − 1)`.
pub fn level_roughness(k: usize, count: usize) -> f64 {
    k as f64 / (count - 1) as f64
}

/// Level 0 is `env`; level `k` holds `ḡ(texel direction, ρ_k)`, each texel
/// drawing its own shared samples from stream `texel index`.
pub fn bake_pyramid(env: &RadianceMap, cfg: &PyramidConfig) -> Result<PrefilteredPyramid> {
    if cfg.levels < 2 {
        return Err(Error::InvalidArgument(format!("level count {} < 2", cfg.levels)));
    }
    if cfg.samples_per_texel == 0 {
        return Err(Error::InvalidArgument("samples per texel must be positive".into()));
    }
    let width = cfg.level_width.unwrap_or(env.width());
    if width < 2 || width % 2 != 0 {
        return Err(Error::InvalidArgument(format!("level width {width} must be even and ≥ 2")));
    }
    let height = width / 2;
    let rhos: Vec<f64> = (1..cfg.levels).map(|k| level_roughness(k, cfg.levels)).collect();
    let per_texel: Vec<Vec<Rgb>> = (0..width * height)
        .into_par_iter()
        .map(|idx| {
            let (col, row) = (idx % width, idx / width);
            let dir = crate::envmap::uv_to_dir(
                (col as f64 + 0.5) / width as f64,
                (row as f64 + 0.5) / height as f64,
            );
            let mut rng = RngStream::new(cfg.seed, idx as u64);
            let samples = draw_light_samples(env, cfg.samples_per_texel, &mut rng);
            rhos.iter().map(|&rho| mc_prefilter(env, dir, rho, &samples)).collect()
        })
        .collect::<Result<_>>()?;
    let mut levels = vec![(0.0, env.clone())];
    for (k, &rho) in rhos.iter().enumerate() {
        let texels = per_texel.iter().map(|t| t[k]).collect();
        levels.push((rho, RadianceMap::new(width, height, texels)?));
    }
    PrefilteredPyramid::new(levels)
}

pub fn lookup_pyramid(pyr: &PrefilteredPyramid, dir: Vec3, rho: f64) -> Rgb {
    pyr.lookup(dir, rho)
}
