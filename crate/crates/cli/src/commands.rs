use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Serialize;

use splitsum::brdf::{bake_brdf_lut, BrdfLut, Material, DEFAULT_LUT_RESOLUTION, DEFAULT_LUT_SAMPLES};
use splitsum::envmap::{load_hdr, save_hdr, save_png_srgb, Image, RadianceMap};
use splitsum::geometry::{load_obj, MaterialSource, TriangleMesh};
use splitsum::illum_field::{fit_with_progress, FieldConfig, IllumField, TrainConfig};
use splitsum::io_util::write_atomic;
use splitsum::metrics;
use splitsum::occlusion::{bake_occlusion_table, OcclusionTable, DEFAULT_OCCLUSION_SAMPLES};
use splitsum::prefilter::{bake_pyramid, PrefilteredPyramid, PyramidConfig, DEFAULT_LIGHT_SAMPLES, DEFAULT_PYRAMID_LEVELS};
use splitsum::reference::{render_reference, ReferenceOptions};
use splitsum::scene::{builtin_mesh, BackgroundKind, IllumKind, OcclusionKind, SceneConfig};
use splitsum::shading::{self, Background, IllumSource, OcclusionMode, RenderOptions, ShadeTerms};
use splitsum::{Error, Result, Rgb};

/// Pyramid level width used when baking on the fly.
const DEFAULT_PYRAMID_WIDTH: usize = 64;

fn load_env(path: &Path) -> Result<RadianceMap> {
    RadianceMap::from_image(load_hdr(path)?)
}

fn load_mesh(spec: &str) -> Result<TriangleMesh> {
    match spec.strip_prefix("builtin:") {
        Some(name) => builtin_mesh(name),
        None => load_obj(spec),
    }
}

#[derive(Args, Debug)]
pub struct PrefilterArgs {
    /// Input environment map (.hdr).
    env: PathBuf,
    /// Output directory.
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_PYRAMID_LEVELS)]
    levels: usize,
    /// Light samples per texel, shared across levels.
    #[arg(long, default_value_t = DEFAULT_LIGHT_SAMPLES)]
    samples: usize,
    /// Level width in texels; defaults to the input width.
    #[arg(long)]
    width: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

pub fn prefilter(a: PrefilterArgs) -> Result<()> {
    let env = load_env(&a.env)?;
    let cfg = PyramidConfig { levels: a.levels, samples_per_texel: a.samples, level_width: a.width, seed: a.seed };
    let pyr = bake_pyramid(&env, &cfg)?;
    pyr.save(&a.out)?;
    log::info!("wrote {} levels to {}", pyr.level_count(), a.out.display());
    Ok(())
}

#[derive(Args, Debug)]
pub struct BakeLutArgs {
    /// Output table.
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_LUT_RESOLUTION)]
    res: usize,
    /// Samples per cell.
    #[arg(long, default_value_t = DEFAULT_LUT_SAMPLES)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

pub fn bake_lut(a: BakeLutArgs) -> Result<()> {
    let lut = bake_brdf_lut(a.res, a.samples, a.seed)?;
    lut.save(&a.out)?;
    log::info!("wrote {}×{} table to {}", a.res, a.res, a.out.display());
    Ok(())
}

#[derive(Args, Debug)]
pub struct FitIllumArgs {
    /// Input environment map (.hdr).
    env: PathBuf,
    /// Output field; a `.json` sidecar is written next to it.
    out: PathBuf,
    /// Training configuration (TOML); omitted keys keep their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Use the 5×256 network instead of the default 4×64.
    #[arg(long)]
    large: bool,
    /// Per-step loss as `step,loss` lines.
    #[arg(long)]
    loss_log: Option<PathBuf>,
    /// Summary metrics as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Serialize)]
struct FitSummary {
    steps: usize,
    final_loss: f64,
    initial_regularizer_loss: f64,
    final_regularizer_loss: f64,
    /// `null` when the export matches the input exactly.
    psnr_rho0: Option<f64>,
}

pub fn fit_illum(a: FitIllumArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::IoPath { path: p.clone(), source: e })?;
            toml::from_str::<TrainConfig>(&text).map_err(|e| Error::Config(e.to_string()))?
        }
        None => TrainConfig::default(),
    };
    if let Some(s) = a.steps {
        cfg.steps = s;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if a.large {
        cfg.field = FieldConfig::large();
    }
    cfg.validate()?;
    let env = load_env(&a.env)?;
    let every = (cfg.steps / 20).max(1);
    let mut smoothed = None::<f64>;
    let (field, report) = fit_with_progress(&env, &cfg, |step, loss| {
        let s = smoothed.map_or(loss, |m| 0.9 * m + 0.1 * loss);
        smoothed = Some(s);
        if step % every == 0 || step + 1 == cfg.steps {
            log::info!("step {step:>6}  loss {loss:.6e}  smoothed {s:.6e}");
        }
    })?;
    field.save(&a.out)?;
    let exported = field.export_envmap(0.0, env.width())?;
    let psnr = metrics::compare(env.image(), exported.image(), false)?.psnr;
    log::info!(
        "L_D {:.4e} -> {:.4e}, PSNR(rho=0) {}",
        report.initial_regularizer_loss,
        report.final_regularizer_loss,
        fmt_psnr(psnr)
    );
    if let Some(path) = &a.loss_log {
        let mut text = String::from("step,loss\n");
        for (k, l) in report.losses.iter().enumerate() {
            text.push_str(&format!("{k},{l:e}\n"));
        }
        write_atomic(path, |w| Ok(w.write_all(text.as_bytes())?))?;
    }
    if let Some(path) = &a.report {
        let summary = FitSummary {
            steps: report.losses.len(),
            final_loss: report.losses.last().copied().unwrap_or(f64::NAN),
            initial_regularizer_loss: report.initial_regularizer_loss,
            final_regularizer_loss: report.final_regularizer_loss,
            psnr_rho0: psnr.is_finite().then_some(psnr),
        };
        let json = serde_json::to_string_pretty(&summary).map_err(|e| Error::Format(e.to_string()))?;
        write_atomic(path, |w| Ok(w.write_all(json.as_bytes())?))?;
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct BakeOcclusionArgs {
    /// Mesh (.obj) or `builtin:<name>`.
    mesh: String,
    /// Environment map (.hdr) weighting the occlusion.
    env: PathBuf,
    /// Output table.
    out: PathBuf,
    /// Monte Carlo samples per point.
    #[arg(long, default_value_t = DEFAULT_OCCLUSION_SAMPLES)]
    samples: usize,
    /// Surface points to bake.
    #[arg(long, default_value_t = 1024)]
    points: usize,
    /// Roughness of the specular lobe.
    #[arg(long, default_value_t = Material::default().roughness)]
    roughness: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

pub fn bake_occlusion(a: BakeOcclusionArgs) -> Result<()> {
    if a.samples == 0 || a.points == 0 {
        return Err(Error::InvalidArgument("--samples and --points must be positive".into()));
    }
    let mesh = load_mesh(&a.mesh)?;
    let env = load_env(&a.env)?;
    let mat = MaterialSource::Constant(Material { roughness: a.roughness, ..Material::default() });
    let table = bake_occlusion_table(&mesh, &env, a.points, a.samples, &mat, None, a.seed)?;
    table.save(&a.out)?;
    log::info!("wrote {} records to {}", table.records.len(), a.out.display());
    Ok(())
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum IllumArg {
    Pyramid,
    Field,
    Mc,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum OcclusionArg {
    None,
    Mc,
    Baked,
}

#[derive(Args, Debug)]
pub struct RenderArgs {
    /// Scene description (TOML).
    scene: PathBuf,
    /// Output image: `.hdr` (linear) or `.png` (sRGB).
    out: PathBuf,
    /// Illumination source; overrides the scene file.
    #[arg(long, value_enum)]
    illum: Option<IllumArg>,
    /// Occlusion mode; overrides the scene file.
    #[arg(long, value_enum)]
    occlusion: Option<OcclusionArg>,
    /// Render with the brute-force Monte Carlo reference instead.
    #[arg(long)]
    reference: bool,
    /// Samples per pixel for the reference.
    #[arg(long, default_value_t = 1024)]
    spp: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Exposure multiplier for PNG output.
    #[arg(long, default_value_t = 1.0)]
    exposure: f64,
    /// Pyramid levels when baking on the fly.
    #[arg(long, default_value_t = DEFAULT_PYRAMID_LEVELS)]
    levels: usize,
    /// Light samples per texel when baking a pyramid on the fly.
    #[arg(long, default_value_t = DEFAULT_LIGHT_SAMPLES)]
    light_samples: usize,
    /// Pyramid level width when baking on the fly.
    #[arg(long, default_value_t = DEFAULT_PYRAMID_WIDTH)]
    pyramid_width: usize,
}

enum OutputFormat {
    Hdr,
    Png,
}

fn output_format(path: &Path) -> Result<OutputFormat> {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("hdr") => Ok(OutputFormat::Hdr),
        Some("png") => Ok(OutputFormat::Png),
        _ => Err(Error::InvalidArgument(format!("{}: output must end in .hdr or .png", path.display()))),
    }
}

fn build_illum(cfg: &SceneConfig, kind: IllumKind, env: &RadianceMap, a: &RenderArgs, seed: u64) -> Result<IllumSource> {
    let ic = &cfg.illumination;
    Ok(match kind {
        IllumKind::Pyramid => match &ic.pyramid {
            Some(dir) => IllumSource::Pyramid(PrefilteredPyramid::load(cfg.resolve(dir))?),
            None => {
                let pc = PyramidConfig {
                    levels: a.levels,
                    samples_per_texel: a.light_samples,
                    level_width: Some(a.pyramid_width.min(env.width())),
                    seed,
                };
                log::info!("baking a {}-level pyramid", pc.levels);
                IllumSource::Pyramid(bake_pyramid(env, &pc)?)
            }
        },
        IllumKind::Field => {
            let path = ic.field.as_ref().ok_or_else(|| {
                Error::Config("field illumination needs `illumination.field` in the scene file".into())
            })?;
            IllumSource::Field(IllumField::load(cfg.resolve(path))?)
        }
        IllumKind::Mc => IllumSource::direct_mc(env.clone(), ic.mc_samples, seed)?,
    })
}

fn build_lut(cfg: &SceneConfig) -> Result<BrdfLut> {
    match &cfg.illumination.lut {
        Some(p) => BrdfLut::load(cfg.resolve(p)),
        None => bake_brdf_lut(DEFAULT_LUT_RESOLUTION, DEFAULT_LUT_SAMPLES, 0),
    }
}

pub fn render(a: RenderArgs) -> Result<()> {
    let format = output_format(&a.out)?;
    if !(a.exposure > 0.0 && a.exposure.is_finite()) {
        return Err(Error::InvalidArgument("--exposure must be positive".into()));
    }
    let cfg = SceneConfig::load(&a.scene)?;
    let seed = a.seed.unwrap_or(cfg.seed);
    let env = cfg.load_env()?;
    let scene = cfg.load_scene()?;
    let camera = cfg.camera.camera()?;
    let background = match cfg.output.background {
        BackgroundKind::Env => Background::Env(&env),
        BackgroundKind::Black => Background::Black,
    };
    let rendered = if a.reference {
        if a.spp == 0 {
            return Err(Error::InvalidArgument("--spp must be positive".into()));
        }
        let opts = ReferenceOptions {
            samples_per_pixel: a.spp,
            visibility: true,
            reflectance: Default::default(),
            background,
            seed,
        };
        render_reference(&scene, &camera, &env, &opts)?
    } else {
        let illum_kind = match a.illum {
            Some(IllumArg::Pyramid) => IllumKind::Pyramid,
            Some(IllumArg::Field) => IllumKind::Field,
            Some(IllumArg::Mc) => IllumKind::Mc,
            None => cfg.illumination.source,
        };
        let occ_kind = match a.occlusion {
            Some(OcclusionArg::None) => OcclusionKind::None,
            Some(OcclusionArg::Mc) => OcclusionKind::Mc,
            Some(OcclusionArg::Baked) => OcclusionKind::Baked,
            None => cfg.occlusion.mode,
        };
        let table;
        let occlusion = match occ_kind {
            OcclusionKind::None => OcclusionMode::None,
            OcclusionKind::Mc => OcclusionMode::Mc { env: &env, samples: cfg.occlusion.samples },
            OcclusionKind::Baked => {
                let path = cfg.occlusion.table.as_ref().ok_or_else(|| {
                    Error::Config("baked occlusion needs `occlusion.table` in the scene file".into())
                })?;
                table = OcclusionTable::load(cfg.resolve(path))?;
                OcclusionMode::Baked(&table)
            }
        };
        let illum = build_illum(&cfg, illum_kind, &env, &a, seed)?;
        let lut = build_lut(&cfg)?;
        let opts = RenderOptions { occlusion, background, terms: ShadeTerms::ALL, seed };
        let r = shading::render(&scene, &camera, &illum, &lut, &opts)?;
        if r.back_facing > 0 {
            log::warn!("{} pixels hit back-facing geometry", r.back_facing);
        }
        r
    };
    match format {
        OutputFormat::Hdr => save_hdr(&rendered.image, &a.out)?,
        OutputFormat::Png => save_png_srgb(&rendered.image, &a.out, a.exposure)?,
    }
    log::info!("wrote {}×{} image to {}", camera.width, camera.height, a.out.display());
    Ok(())
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// Reference image (.hdr).
    a: PathBuf,
    /// Candidate image (.hdr).
    b: PathBuf,
    /// Fit a per-channel scale of the candidate before measuring error.
    #[arg(long)]
    channel_scale: bool,
}

fn fmt_psnr(p: f64) -> String {
    if p.is_finite() {
        format!("{p:.4}")
    } else {
        "inf".to_string()
    }
}

pub fn compare(a: CompareArgs) -> Result<()> {
    let ia: Image = load_hdr(&a.a)?;
    let ib: Image = load_hdr(&a.b)?;
    let c = metrics::compare(&ia, &ib, a.channel_scale)?;
    let s = Rgb::from_array(c.scales);
    println!("scales {:.6} {:.6} {:.6}", s.r, s.g, s.b);
    println!("mse {:.6e}", c.mse);
    println!("psnr {}", fmt_psnr(c.psnr));
    Ok(())
}
