//! Diffuse and specular occlusion factors.
//!
//! Both are ratio estimators of visibility-masked over unmasked radiance:
//! `ō_d = Σ L_i V_i / Σ L_i` over cosine-weighted directions and
//! `ō_s = Σ L_i V_i ⟨ω_i,n⟩⁺ / Σ L_i ⟨ω_i,n⟩⁺` over GGX-lobe directions.

use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use rayon::prelude::*;

use crate::envmap::RadianceMap;
use crate::error::{Error, Result};
use crate::geometry::{sample_surface, Bvh, MaterialSource, SurfacePoint, TriangleMesh};
use crate::illum_field::frequency_encode;
use crate::io_util::{read_f32_le, read_u32_le, write_atomic};
use crate::math::{Rgb, Vec3};
use crate::mlp::{learning_rate, Adam, Mlp, OutputActivation};
use crate::prefilter::MIN_DENOMINATOR;
use crate::sampling::{cos_hemisphere, ggx_lobe, RngStream, RHO_MIN};

/// Paper default for the number of occlusion samples per point.
pub const DEFAULT_OCCLUSION_SAMPLES: usize = 64;

/// One ratio estimate with its delta-method standard error per channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioEstimate {
    pub value: Rgb,
    pub std_err: Rgb,
    pub sample_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OcclusionEstimate {
    pub o_d: Rgb,
    pub o_s: Rgb,
    pub sample_count: usize,
    pub std_err_d: Rgb,
    pub std_err_s: Rgb,
}

impl OcclusionEstimate {
    pub fn from_parts(d: RatioEstimate, s: RatioEstimate) -> Self {
        OcclusionEstimate {
            o_d: d.value,
            o_s: s.value,
            sample_count: d.sample_count.min(s.sample_count),
            std_err_d: d.std_err,
            std_err_s: s.std_err,
        }
    }

    /// No occlusion.
    pub fn unit() -> Self {
        OcclusionEstimate {
            o_d: Rgb::WHITE,
            o_s: Rgb::WHITE,
            sample_count: 0,
            std_err_d: Rgb::BLACK,
            std_err_s: Rgb::BLACK,
        }
    }
}

/// Accumulates `(weight, visible)` pairs per channel.
struct RatioAccumulator {
    x: Vec<Rgb>,
    y: Vec<Rgb>,
}

impl RatioAccumulator {
    fn new(n: usize) -> Self {
        RatioAccumulator { x: Vec::with_capacity(n), y: Vec::with_capacity(n) }
    }

    fn push(&mut self, weight: Rgb, visible: bool) {
        self.x.push(weight);
        self.y.push(if visible { weight } else { Rgb::BLACK });
    }

    /// Channels whose denominator vanishes fall back to the ratio of the
    /// channel means; if that vanishes too the estimate is degenerate.
    fn finish(self) -> Result<RatioEstimate> {
        let n = self.x.len();
        let sx = self.x.iter().fold(Rgb::BLACK, |a, &b| a + b);
        let sy = self.y.iter().fold(Rgb::BLACK, |a, &b| a + b);
        let mean_den = sx.mean();
        if !(mean_den > MIN_DENOMINATOR) {
            return Err(Error::DegenerateEstimator(mean_den));
        }
        let fallback = sy.mean() / mean_den;
        let mut value = Rgb::BLACK;
        let mut std_err = Rgb::BLACK;
        for c in 0..3 {
            let (r, proj): (f64, Box<dyn Fn(Rgb) -> f64>) = if sx[c] > MIN_DENOMINATOR {
                (sy[c] / sx[c], Box::new(move |p: Rgb| p[c]))
            } else {
                (fallback, Box::new(|p: Rgb| p.mean()))
            };
            let r = r.clamp(0.0, 1.0);
            let xbar = self.x.iter().map(|&p| proj(p)).sum::<f64>() / n as f64;
            let se = if n > 1 {
                let ss: f64 = self.x.iter().zip(&self.y).map(|(&x, &y)| (proj(y) - r * proj(x)).powi(2)).sum();
                (ss / ((n - 1) as f64 * n as f64)).sqrt() / xbar
            } else {
                0.0
            };
            match c {
                0 => (value.r, std_err.r) = (r, se),
                1 => (value.g, std_err.g) = (r, se),
                _ => (value.b, std_err.b) = (r, se),
            }
        }
        Ok(RatioEstimate { value, std_err, sample_count: n })
    }
}

fn visible(bvh: Option<&Bvh>, x: Vec3, d: Vec3, t_min: f64) -> bool {
    bvh.is_none_or(|b| !b.occluded(x, d, t_min))
}

/// `ō_d` at `x` with normal `n` from `samples` cosine-weighted directions.
pub fn mc_occlusion_diffuse(
    x: Vec3,
    n: Vec3,
    env: &RadianceMap,
    bvh: Option<&Bvh>,
    samples: usize,
    t_min: f64,
    rng: &mut RngStream,
) -> Result<RatioEstimate> {
    check_count(samples)?;
    let mut acc = RatioAccumulator::new(samples);
    for _ in 0..samples {
        let d = cos_hemisphere(n, rng).dir;
        acc.push(env.sample_bilinear(d), visible(bvh, x, d, t_min));
    }
    acc.finish()
}

/// `ō_s` at `x` with GGX-lobe directions about `axis` (normally `n`).
#[allow(clippy::too_many_arguments)]
pub fn mc_occlusion_specular(
    x: Vec3,
    n: Vec3,
    axis: Vec3,
    rho: f64,
    env: &RadianceMap,
    bvh: Option<&Bvh>,
    samples: usize,
    t_min: f64,
    rng: &mut RngStream,
) -> Result<RatioEstimate> {
    check_count(samples)?;
    let mut acc = RatioAccumulator::new(samples);
    for _ in 0..samples {
        let d = ggx_lobe(axis, rho, rng)?.dir;
        let c = d.dot(n);
        if c <= 0.0 {
            acc.push(Rgb::BLACK, false);
            continue;
        }
        acc.push(env.sample_bilinear(d) * c, visible(bvh, x, d, t_min));
    }
    acc.finish()
}

fn check_count(samples: usize) -> Result<()> {
    if samples == 0 {
        return Err(Error::InvalidArgument("occlusion needs at least one sample".into()));
    }
    Ok(())
}

/// Both factors at a surface point, the specular lobe about the normal
/// with the point's roughness (at least `RHO_MIN`).
pub fn estimate_occlusion(
    point: &SurfacePoint,
    env: &RadianceMap,
    bvh: Option<&Bvh>,
    samples: usize,
    t_min: f64,
    rng: &mut RngStream,
) -> Result<OcclusionEstimate> {
    let n = point.normal;
    let d = mc_occlusion_diffuse(point.position, n, env, bvh, samples, t_min, rng)?;
    let rho = point.material.roughness.max(RHO_MIN);
    let s = mc_occlusion_specular(point.position, n, n, rho, env, bvh, samples, t_min, rng)?;
    Ok(OcclusionEstimate::from_parts(d, s))
}

/// Estimates for many points in parallel, point `i` using stream `i`.
pub fn estimate_occlusion_batch(
    points: &[SurfacePoint],
    env: &RadianceMap,
    bvh: Option<&Bvh>,
    samples: usize,
    t_min: f64,
    seed: u64,
) -> Result<Vec<OcclusionEstimate>> {
    points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut rng = RngStream::new(seed, i as u64);
            estimate_occlusion(p, env, bvh, samples, t_min, &mut rng)
        })
        .collect()
}

/// Replaces each factor by the mean of its channels.
pub fn channel_average(est: &OcclusionEstimate) -> OcclusionEstimate {
    OcclusionEstimate {
        o_d: Rgb::splat(est.o_d.mean()),
        o_s: Rgb::splat(est.o_s.mean()),
        std_err_d: Rgb::splat(est.std_err_d.mean()),
        std_err_s: Rgb::splat(est.std_err_s.mean()),
        sample_count: est.sample_count,
    }
}

/// Predicted `(ô_d, ô_s)` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OcclusionPair {
    pub o_d: Rgb,
    pub o_s: Rgb,
}

impl From<&OcclusionEstimate> for OcclusionPair {
    fn from(e: &OcclusionEstimate) -> Self {
        OcclusionPair { o_d: e.o_d, o_s: e.o_s }
    }
}

/// `(1/|X|) Σ w ‖ô − ō‖²` with `‖·‖²` summed over both factors.
pub fn occlusion_loss(predicted: &[OcclusionPair], targets: &[OcclusionEstimate], weights: &[f64]) -> Result<f64> {
    if predicted.len() != targets.len() || predicted.len() != weights.len() {
        return Err(Error::LengthMismatch(format!(
            "{} predictions, {} targets, {} weights",
            predicted.len(),
            targets.len(),
            weights.len()
        )));
    }
    if predicted.is_empty() {
        return Err(Error::InvalidArgument("empty occlusion batch".into()));
    }
    if weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::InvalidArgument("weights must be non-negative".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidArgument(format!("weights sum to {total}, not 1")));
    }
    let sum: f64 = predicted
        .iter()
        .zip(targets)
        .zip(weights)
        .map(|((p, t), w)| w * (p.o_d.distance_squared(t.o_d) + p.o_s.distance_squared(t.o_s)))
        .sum();
    Ok(sum / predicted.len() as f64)
}

/// Positional field `x → (ô_d, ô_s)` with sigmoid outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct OcclusionField {
    mlp: Mlp,
    lo: Vec3,
    hi: Vec3,
    frequencies: usize,
}

impl OcclusionField {
    fn encode(&self, x: Vec3, out: &mut Vec<f64>) {
        let ext = (self.hi - self.lo).max(Vec3::splat(1e-9));
        let p = Vec3::new(
            2.0 * (x.x - self.lo.x) / ext.x - 1.0,
            2.0 * (x.y - self.lo.y) / ext.y - 1.0,
            2.0 * (x.z - self.lo.z) / ext.z - 1.0,
        );
        let f = self.frequencies;
        frequency_encode(&[(p.x, f), (p.y, f), (p.z, f)], out);
    }

    fn encode_batch(&self, xs: &[Vec3]) -> Array2<f64> {
        let len = 3 + 6 * self.frequencies;
        let mut flat = Vec::with_capacity(xs.len() * len);
        for &x in xs {
            self.encode(x, &mut flat);
        }
        Array2::from_shape_vec((xs.len(), len), flat).expect("encoding length")
    }

    pub fn predict_batch(&self, xs: &[Vec3]) -> Vec<OcclusionPair> {
        if xs.is_empty() {
            return Vec::new();
        }
        let out = self.mlp.forward(self.encode_batch(xs).view());
        out.rows()
            .into_iter()
            .map(|r| OcclusionPair { o_d: Rgb::new(r[0], r[1], r[2]), o_s: Rgb::new(r[3], r[4], r[5]) })
            .collect()
    }

    pub fn predict(&self, x: Vec3) -> OcclusionPair {
        self.predict_batch(&[x])[0]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OcclusionFitConfig {
    pub points: usize,
    pub samples: usize,
    pub frequencies: usize,
    pub hidden_layers: usize,
    pub hidden_width: usize,
    pub steps: usize,
    pub batch: usize,
    pub learning_rate: f64,
    pub warmup_steps: usize,
    pub final_lr_factor: f64,
    /// Material of the sampled points; its roughness sets the specular lobe.
    pub materials: MaterialSource,
    /// Self-intersection offset; `None` uses the mesh default.
    pub t_min: Option<f64>,
    pub seed: u64,
}

impl Default for OcclusionFitConfig {
    fn default() -> Self {
        OcclusionFitConfig {
            points: 4096,
            samples: DEFAULT_OCCLUSION_SAMPLES,
            frequencies: 3,
            hidden_layers: 3,
            hidden_width: 64,
            steps: 3000,
            batch: 256,
            learning_rate: 5e-3,
            warmup_steps: 100,
            final_lr_factor: 0.1,
            materials: MaterialSource::Constant(Default::default()),
            t_min: None,
            seed: 0,
        }
    }
}

/// Samples surface points on `mesh`, estimates their occlusion against the
/// mesh itself and fits an [`OcclusionField`] to the estimates under
/// [`occlusion_loss`] with uniform weights.
pub fn fit_occlusion_field(mesh: &TriangleMesh, env: &RadianceMap, cfg: &OcclusionFitConfig) -> Result<OcclusionField> {
    if cfg.points == 0 || cfg.steps == 0 || cfg.batch == 0 || cfg.frequencies == 0 {
        return Err(Error::Config("occlusion fit counts must be positive".into()));
    }
    cfg.materials.validate(mesh)?;
    let bvh = Bvh::build(mesh.clone());
    let t_min = cfg.t_min.unwrap_or_else(|| crate::geometry::default_t_min(mesh));
    let mut rng = RngStream::new(cfg.seed, u64::MAX);
    let points = sample_surface(mesh, cfg.points, &mut rng, &cfg.materials)?;
    let targets = estimate_occlusion_batch(&points, env, Some(&bvh), cfg.samples, t_min, cfg.seed)?;
    let (lo, hi) = mesh.bounds().ok_or(Error::EmptyMesh)?;
    let mut dims = vec![3 + 6 * cfg.frequencies];
    dims.extend(std::iter::repeat_n(cfg.hidden_width, cfg.hidden_layers));
    dims.push(6);
    let mlp = Mlp::new(&dims, OutputActivation::Sigmoid, &mut rng)?;
    let mut field = OcclusionField { mlp, lo, hi, frequencies: cfg.frequencies };
    let mut adam = Adam::new(field.mlp.param_count());
    let batch = cfg.batch.min(points.len());
    for step in 0..cfg.steps {
        let mut srng = RngStream::new(cfg.seed, step as u64);
        let idx: Vec<usize> = (0..batch).map(|_| srng.below(points.len())).collect();
        let xs: Vec<Vec3> = idx.iter().map(|&i| points[i].position).collect();
        let x = field.encode_batch(&xs);
        let cache = field.mlp.forward_cached(x.view());
        // d/dô of (1/|X|) Σ w ‖ô − ō‖² with w = 1/|X|
        let scale = 2.0 / (batch * batch) as f64;
        let mut d = Array2::zeros((batch, 6));
        let mut loss = 0.0;
        for (r, &i) in idx.iter().enumerate() {
            let t = &targets[i];
            let goal = [t.o_d.r, t.o_d.g, t.o_d.b, t.o_s.r, t.o_s.g, t.o_s.b];
            for c in 0..6 {
                let diff = cache.output[[r, c]] - goal[c];
                loss += diff * diff;
                d[[r, c]] = scale * diff;
            }
        }
        if !loss.is_finite() {
            return Err(Error::Divergence { step, loss });
        }
        let grads = field.mlp.backward(&cache, d.view());
        let lr = learning_rate(step, cfg.steps, cfg.warmup_steps, cfg.learning_rate, cfg.final_lr_factor);
        adam.step(&mut field.mlp, &grads, lr);
        if field.mlp.check_finite().is_err() {
            return Err(Error::Divergence { step, loss });
        }
    }
    Ok(field)
}

/// Baked occlusion per point, queried by nearest neighbour.
#[derive(Debug, Clone, PartialEq)]
pub struct OcclusionTable {
    pub records: Vec<(Vec3, OcclusionPair)>,
}

const OCCL_MAGIC: &[u8; 5] = b"OCCL1";

impl OcclusionTable {
    pub fn from_estimates(points: &[SurfacePoint], estimates: &[OcclusionEstimate]) -> Result<Self> {
        if points.len() != estimates.len() {
            return Err(Error::LengthMismatch(format!("{} points, {} estimates", points.len(), estimates.len())));
        }
        Ok(OcclusionTable {
            records: points.iter().zip(estimates).map(|(p, e)| (p.position, OcclusionPair::from(e))).collect(),
        })
    }

    /// Record nearest to `x`; unit occlusion for an empty table.
    pub fn lookup(&self, x: Vec3) -> OcclusionPair {
        self.records
            .iter()
            .min_by(|a, b| (a.0 - x).length_squared().total_cmp(&(b.0 - x).length_squared()))
            .map(|r| r.1)
            .unwrap_or(OcclusionPair { o_d: Rgb::WHITE, o_s: Rgb::WHITE })
    }

    pub fn write_to(&self, w: &mut dyn Write) -> Result<()> {
        w.write_all(OCCL_MAGIC)?;
        w.write_all(&(self.records.len() as u32).to_le_bytes())?;
        for (p, o) in &self.records {
            let vals = [p.x, p.y, p.z, o.o_d.r, o.o_d.g, o.o_d.b, o.o_s.r, o.o_s.g, o.o_s.b];
            for v in vals {
                w.write_all(&(v as f32).to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if !bytes.starts_with(OCCL_MAGIC) {
            return Err(Error::Format("missing OCCL1 magic".into()));
        }
        let count = read_u32_le(bytes, 5).ok_or_else(|| Error::Format("truncated count".into()))? as usize;
        if bytes.len() != 9 + 36 * count {
            return Err(Error::Format(format!("expected {} record bytes, found {}", 36 * count, bytes.len() - 9)));
        }
        let records = (0..count)
            .map(|i| {
                let f = |k: usize| read_f32_le(bytes, 9 + 36 * i + 4 * k).expect("length checked") as f64;
                (
                    Vec3::new(f(0), f(1), f(2)),
                    OcclusionPair { o_d: Rgb::new(f(3), f(4), f(5)), o_s: Rgb::new(f(6), f(7), f(8)) },
                )
            })
            .collect();
        Ok(OcclusionTable { records })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), |w| self.write_to(w))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(Error::io_at(path))?;
        Self::from_bytes(&bytes)
    }
}

/// Samples `points` surface points on `mesh` and bakes their occlusion
/// against the mesh. An empty mesh gives an empty table, which looks up as
/// unit occlusion everywhere.
pub fn bake_occlusion_table(
    mesh: &TriangleMesh,
    env: &RadianceMap,
    points: usize,
    samples: usize,
    materials: &MaterialSource,
    t_min: Option<f64>,
    seed: u64,
) -> Result<OcclusionTable> {
    materials.validate(mesh)?;
    if mesh.is_empty() {
        return Ok(OcclusionTable { records: Vec::new() });
    }
    let bvh = Bvh::build(mesh.clone());
    let t_min = t_min.unwrap_or_else(|| crate::geometry::default_t_min(mesh));
    let mut rng = RngStream::new(seed, u64::MAX);
    let pts = sample_surface(mesh, points, &mut rng, materials)?;
    let est = estimate_occlusion_batch(&pts, env, Some(&bvh), samples, t_min, seed)?;
    OcclusionTable::from_estimates(&pts, &est)
}
