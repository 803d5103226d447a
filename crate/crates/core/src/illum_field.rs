//! Neural pre-integrated illumination `ĝ(ω, ρ)`.
//!
//! A positional-encoded MLP with a softplus head, supervised at `ρ = 0`
//! by the environment and at `ρ > 0` by the ratio estimator built from
//! the field's own `ρ = 0` outputs. Those regularizer targets are treated
//! as constants within each step.

use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::envmap::RadianceMap;
use crate::error::{Error, Result};
use crate::io_util::{read_f32_le, read_u32_le, write_atomic};
use crate::math::{Rgb, Vec3, PI};
use crate::mlp::{flatten, learning_rate, Adam, Layer, Mlp, OutputActivation};
use crate::prefilter::{ratio_estimate, LightSample};
use crate::sampling::{uniform_sphere, RngStream, RHO_MIN};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncodingConfig {
    pub dir_frequencies: usize,
    pub rough_frequencies: usize,
}

impl Default for EncodingConfig {
    fn default() -> Self {
        EncodingConfig { dir_frequencies: 10, rough_frequencies: 5 }
    }
}

impl EncodingConfig {
    /// `4 + 2 (3 · dir_frequencies + rough_frequencies)`.
    pub fn encoded_len(&self) -> usize {
        4 + 2 * (3 * self.dir_frequencies + self.rough_frequencies)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dir_frequencies == 0 || self.rough_frequencies == 0 {
            return Err(Error::InvalidArgument("encoding frequency counts must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// Raw values followed by `sin(2ᵏπx), cos(2ᵏπx)` for `k < freqs` of each
/// value in turn.
pub fn frequency_encode(values: &[(f64, usize)], out: &mut Vec<f64>) {
    out.extend(values.iter().map(|v| v.0));
    for &(x, freqs) in values {
        let mut w = PI;
        for _ in 0..freqs {
            let (s, c) = (w * x).sin_cos();
            out.push(s);
            out.push(c);
            w *= 2.0;
        }
    }
}

pub fn positional_encode(dir: Vec3, rho: f64, cfg: &EncodingConfig) -> Vec<f64> {
    let mut out = Vec::with_capacity(cfg.encoded_len());
    encode_into(dir, rho, cfg, &mut out);
    out
}

fn encode_into(dir: Vec3, rho: f64, cfg: &EncodingConfig, out: &mut Vec<f64>) {
    let d = cfg.dir_frequencies;
    frequency_encode(&[(dir.x, d), (dir.y, d), (dir.z, d), (rho, cfg.rough_frequencies)], out);
}

/// Network shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FieldConfig {
    pub encoding: EncodingConfig,
    pub hidden_layers: usize,
    pub hidden_width: usize,
}

impl Default for FieldConfig {
    fn default() -> Self {
        FieldConfig { encoding: EncodingConfig::default(), hidden_layers: 4, hidden_width: 64 }
    }
}

impl FieldConfig {
    /// Five hidden layers of 256 units.
    pub fn large() -> Self {
        FieldConfig { hidden_layers: 5, hidden_width: 256, ..Default::default() }
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.encoding.encoded_len()];
        d.extend(std::iter::repeat_n(self.hidden_width, self.hidden_layers));
        d.push(3);
        d
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IllumField {
    encoding: EncodingConfig,
    mlp: Mlp,
}

impl IllumField {
    pub fn new(cfg: &FieldConfig, seed: u64) -> Result<Self> {
        cfg.encoding.validate()?;
        if cfg.hidden_layers == 0 || cfg.hidden_width == 0 {
            return Err(Error::InvalidArgument("field needs at least one hidden unit".into()));
        }
        let mut rng = RngStream::new(seed, u64::MAX);
        let mlp = Mlp::new(&cfg.dims(), OutputActivation::Softplus, &mut rng)?;
        Ok(IllumField { encoding: cfg.encoding, mlp })
    }

    pub fn from_parts(encoding: EncodingConfig, mlp: Mlp) -> Result<Self> {
        encoding.validate()?;
        if mlp.input_dim() != encoding.encoded_len() || mlp.output_dim() != 3 {
            return Err(Error::DimensionMismatch(format!(
                "network {:?} does not match encoding length {}",
                mlp.dims(),
                encoding.encoded_len()
            )));
        }
        if mlp.output_activation() != OutputActivation::Softplus {
            return Err(Error::InvalidArgument("illumination field needs a softplus head".into()));
        }
        Ok(IllumField { encoding, mlp })
    }

    pub fn encoding(&self) -> &EncodingConfig {
        &self.encoding
    }

    pub fn mlp(&self) -> &Mlp {
        &self.mlp
    }

    pub fn mlp_mut(&mut self) -> &mut Mlp {
        &mut self.mlp
    }

    pub fn encode_batch(&self, queries: &[(Vec3, f64)]) -> Array2<f64> {
        let len = self.encoding.encoded_len();
        let mut flat = Vec::with_capacity(queries.len() * len);
        for &(d, rho) in queries {
            encode_into(d, rho, &self.encoding, &mut flat);
        }
        Array2::from_shape_vec((queries.len(), len), flat).expect("encoding length")
    }

    pub fn forward_batch(&self, queries: &[(Vec3, f64)]) -> Result<Vec<Rgb>> {
        if queries.is_empty() {
            return Ok(Vec::new());
        }
        self.mlp.check_finite()?;
        let out = self.mlp.forward(self.encode_batch(queries).view());
        let rows: Vec<Rgb> = out.rows().into_iter().map(|r| Rgb::new(r[0], r[1], r[2])).collect();
        if rows.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("field output".into()));
        }
        Ok(rows)
    }

    /// `ĝ(ω, ρ)`.
    pub fn forward(&self, dir: Vec3, rho: f64) -> Result<Rgb> {
        Ok(self.forward_batch(&[(dir, rho)])?[0])
    }

    /// Evaluates the field at every texel-center direction of a `width`-wide map.
    pub fn export_envmap(&self, rho: f64, width: usize) -> Result<RadianceMap> {
        if width < 2 || width % 2 != 0 {
            return Err(Error::InvalidArgument(format!("export width {width} must be even and ≥ 2")));
        }
        let height = width / 2;
        let queries: Vec<(Vec3, f64)> = (0..width * height)
            .map(|i| {
                let (c, r) = (i % width, i / width);
                let d = crate::envmap::uv_to_dir(
                    (c as f64 + 0.5) / width as f64,
                    (r as f64 + 0.5) / height as f64,
                );
                (d, rho)
            })
            .collect();
        let mut texels = Vec::with_capacity(queries.len());
        for chunk in queries.chunks(4096) {
            texels.extend(self.forward_batch(chunk)?);
        }
        RadianceMap::new(width, height, texels)
    }

    pub fn write_to(&self, w: &mut dyn Write) -> Result<()> {
        let dims = self.mlp.dims();
        w.write_all(FIELD_MAGIC)?;
        w.write_all(&(self.encoding.dir_frequencies as u32).to_le_bytes())?;
        w.write_all(&(self.encoding.rough_frequencies as u32).to_le_bytes())?;
        w.write_all(&((dims.len() - 1) as u32).to_le_bytes())?;
        for d in &dims {
            w.write_all(&(*d as u32).to_le_bytes())?;
        }
        for p in self.mlp.params() {
            w.write_all(&(p as f32).to_le_bytes())?;
        }
        Ok(())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if !bytes.starts_with(FIELD_MAGIC) {
            return Err(Error::Format("missing ILLF1 magic".into()));
        }
        let mut pos = FIELD_MAGIC.len();
        let mut next_u32 = |what: &str| -> Result<usize> {
            let v = read_u32_le(bytes, pos).ok_or_else(|| Error::Format(format!("truncated {what}")))?;
            pos += 4;
            Ok(v as usize)
        };
        let encoding = EncodingConfig {
            dir_frequencies: next_u32("encoding")?,
            rough_frequencies: next_u32("encoding")?,
        };
        let layer_count = next_u32("layer count")?;
        if layer_count == 0 || layer_count > 64 {
            return Err(Error::Format(format!("implausible layer count {layer_count}")));
        }
        let dims = (0..=layer_count).map(|_| next_u32("dims")).collect::<Result<Vec<_>>>()?;
        let mut layers = Vec::with_capacity(layer_count);
        let expected: usize = dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        if bytes.len() != pos + 4 * expected {
            return Err(Error::Format(format!(
                "expected {} parameter bytes, found {}",
                4 * expected,
                bytes.len().saturating_sub(pos)
            )));
        }
        for w in dims.windows(2) {
            let mut layer = Layer::zeros(w[0], w[1]);
            for p in layer.weights.iter_mut().chain(layer.biases.iter_mut()) {
                *p = read_f32_le(bytes, pos).expect("length checked") as f64;
                pos += 4;
            }
            layers.push(layer);
        }
        IllumField::from_parts(encoding, Mlp::from_layers(layers, OutputActivation::Softplus)?)
    }

    /// Writes the binary parameters to `path` and a JSON description to
    /// `path` with `.json` appended.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        write_atomic(path, |w| self.write_to(w))?;
        let meta = FieldMetadata::describe(self);
        let json = serde_json::to_string_pretty(&meta).map_err(|e| Error::Format(e.to_string()))?;
        write_atomic(&sidecar_path(path), |w| Ok(w.write_all(json.as_bytes())?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(Error::io_at(path))?;
        Self::from_bytes(&bytes)
    }
}

const FIELD_MAGIC: &[u8; 5] = b"ILLF1";

pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    s.into()
}

/// Human-readable description written next to a saved field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMetadata {
    pub format: String,
    pub encoding: EncodingConfig,
    pub layer_dims: Vec<usize>,
    pub hidden_activation: String,
    pub output_activation: String,
    pub parameter_count: usize,
}

impl FieldMetadata {
    pub fn describe(field: &IllumField) -> Self {
        FieldMetadata {
            format: "ILLF1".into(),
            encoding: field.encoding,
            layer_dims: field.mlp.dims(),
            hidden_activation: "relu".into(),
            output_activation: "softplus".into(),
            parameter_count: field.mlp.param_count(),
        }
    }
}

/// One optimization batch.
#[derive(Debug, Clone, Default)]
pub struct TrainBatch {
    /// Reconstruction pairs `(ω, L_i(ω))` evaluated at `ρ = 0`.
    pub recon: Vec<(Vec3, Rgb)>,
    /// Regularizer tuples `(ω_s, ρ_s)`.
    pub regularizer: Vec<(Vec3, f64)>,
    /// Shared uniform-sphere light directions.
    pub lights: Vec<Vec3>,
    pub lambda_rec: f64,
    pub lambda_d: f64,
}

/// `ḡ(s)` for every regularizer tuple, from the field's own `ρ = 0`
/// outputs at the shared light directions. Tuples with `ρ < RHO_MIN` take
/// `ĝ(ω_s, 0)` directly.
pub fn regularizer_targets(field: &IllumField, regularizer: &[(Vec3, f64)], lights: &[Vec3]) -> Result<Vec<Rgb>> {
    if regularizer.is_empty() {
        return Ok(Vec::new());
    }
    let queries: Vec<(Vec3, f64)> = lights.iter().map(|&d| (d, 0.0)).collect();
    let radiance = field.forward_batch(&queries)?;
    let samples: Vec<LightSample> = lights
        .iter()
        .zip(radiance)
        .map(|(&dir, radiance)| LightSample { dir, radiance })
        .collect();
    let smooth: Vec<(Vec3, f64)> = regularizer.iter().map(|&(d, _)| (d, 0.0)).collect();
    let direct = field.forward_batch(&smooth)?;
    regularizer
        .iter()
        .zip(direct)
        .map(|(&(d, rho), g0)| if rho < RHO_MIN { Ok(g0) } else { ratio_estimate(&samples, d, rho.min(1.0)) })
        .collect()
}

/// Loss and gradients with the regularizer targets held fixed.
pub fn loss_with_targets(field: &IllumField, batch: &TrainBatch, targets: &[Rgb]) -> Result<(f64, Vec<Layer>)> {
    if targets.len() != batch.regularizer.len() {
        return Err(Error::LengthMismatch(format!(
            "{} targets for {} regularizer tuples",
            targets.len(),
            batch.regularizer.len()
        )));
    }
    let nr = batch.recon.len();
    let ns = batch.regularizer.len();
    if nr + ns == 0 {
        return Err(Error::InvalidArgument("empty training batch".into()));
    }
    let queries: Vec<(Vec3, f64)> = batch
        .recon
        .iter()
        .map(|&(d, _)| (d, 0.0))
        .chain(batch.regularizer.iter().copied())
        .collect();
    let goal: Vec<Rgb> = batch.recon.iter().map(|&(_, l)| l).chain(targets.iter().copied()).collect();
    let x = field.encode_batch(&queries);
    let cache = field.mlp.forward_cached(x.view());
    let mut d_out = Array2::zeros((nr + ns, 3));
    let mut rec = 0.0;
    let mut reg = 0.0;
    for (i, (row, target)) in cache.output.rows().into_iter().zip(&goal).enumerate() {
        let (scale, acc) = if i < nr {
            (batch.lambda_rec / nr as f64, &mut rec)
        } else {
            (batch.lambda_d / ns as f64, &mut reg)
        };
        for c in 0..3 {
            let diff = row[c] - target[c];
            *acc += diff * diff;
            d_out[[i, c]] = 2.0 * scale * diff;
        }
    }
    let mut loss = 0.0;
    if nr > 0 {
        loss += batch.lambda_rec * rec / nr as f64;
    }
    if ns > 0 {
        loss += batch.lambda_d * reg / ns as f64;
    }
    if !loss.is_finite() {
        return Err(Error::NonFinite(format!("loss {loss}")));
    }
    let grads = field.mlp.backward(&cache, d_out.view());
    Ok((loss, grads))
}

/// `λ_rec · mean ‖ĝ(ω,0) − L_i(ω)‖² + λ_D · L_D` and its gradient.
pub fn loss_and_grad(field: &IllumField, batch: &TrainBatch) -> Result<(f64, Vec<Layer>)> {
    let targets = regularizer_targets(field, &batch.regularizer, &batch.lights)?;
    loss_with_targets(field, batch, &targets)
}

/// `L_D = mean ‖ĝ(s) − ḡ(s)‖²` over the given tuples.
pub fn regularizer_loss(field: &IllumField, regularizer: &[(Vec3, f64)], lights: &[Vec3]) -> Result<f64> {
    let targets = regularizer_targets(field, regularizer, lights)?;
    let pred = field.forward_batch(regularizer)?;
    let sum: f64 = pred.iter().zip(&targets).map(|(p, t)| p.distance_squared(*t)).sum();
    Ok(sum / regularizer.len().max(1) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub field: FieldConfig,
    pub steps: usize,
    pub learning_rate: f64,
    pub warmup_steps: usize,
    /// Learning rate at the last step as a fraction of `learning_rate`.
    pub final_lr_factor: f64,
    pub recon_batch: usize,
    pub regularizer_batch: usize,
    pub light_samples: usize,
    pub lambda_rec: f64,
    pub lambda_d: f64,
    pub eval_regularizer_batch: usize,
    pub eval_light_samples: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            field: FieldConfig::default(),
            steps: 2000,
            learning_rate: 5e-3,
            warmup_steps: 100,
            final_lr_factor: 0.1,
            recon_batch: 512,
            regularizer_batch: 256,
            light_samples: 2048,
            lambda_rec: 10.0,
            lambda_d: 10.0,
            eval_regularizer_batch: 256,
            eval_light_samples: 8192,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.field.encoding.validate()?;
        let counts = [
            ("steps", self.steps),
            ("recon_batch", self.recon_batch),
            ("regularizer_batch", self.regularizer_batch),
            ("light_samples", self.light_samples),
            ("eval_regularizer_batch", self.eval_regularizer_batch),
            ("eval_light_samples", self.eval_light_samples),
            ("hidden_layers", self.field.hidden_layers),
            ("hidden_width", self.field.hidden_width),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.regularizer_batch % 2 != 0 || self.eval_regularizer_batch % 2 != 0 {
            return Err(Error::Config("regularizer batches must be even".into()));
        }
        if !(self.lambda_rec >= 0.0 && self.lambda_d >= 0.0) {
            return Err(Error::Config("loss weights must be non-negative".into()));
        }
        if !(self.learning_rate > 0.0) || !(self.final_lr_factor > 0.0) {
            return Err(Error::Config("learning rate settings must be positive".into()));
        }
        Ok(())
    }
}

/// `count` regularizer tuples: the first half with `ρ ~ U[0, 1]`, the
/// second half with `ρ = 1`; directions uniform on the sphere.
pub fn regularizer_tuples(count: usize, rng: &mut RngStream) -> Vec<(Vec3, f64)> {
    let half = count / 2;
    (0..count)
        .map(|i| {
            let d = uniform_sphere(rng).dir;
            let rho = if i < half { rng.uniform() } else { 1.0 };
            (d, rho)
        })
        .collect()
}

pub fn light_directions(count: usize, rng: &mut RngStream) -> Vec<Vec3> {
    (0..count).map(|_| uniform_sphere(rng).dir).collect()
}

/// Reconstruction pairs at directions uniform in the map's `(u, v)` domain.
pub fn recon_pairs(env: &RadianceMap, count: usize, rng: &mut RngStream) -> Vec<(Vec3, Rgb)> {
    (0..count)
        .map(|_| {
            let (u, v) = rng.uniform2();
            let d = crate::envmap::uv_to_dir(u, v);
            (d, env.sample_bilinear(d))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub losses: Vec<f64>,
    pub initial_regularizer_loss: f64,
    pub final_regularizer_loss: f64,
}

pub fn fit(env: &RadianceMap, cfg: &TrainConfig) -> Result<(IllumField, FitReport)> {
    fit_with_progress(env, cfg, |_, _| {})
}

/// Trains a field; `progress(step, loss)` is called after every step.
///
/// Step `k` draws its batches from stream `k` of the seed; the evaluation
/// set for `L_D` comes from a separate fixed stream.
pub fn fit_with_progress(
    env: &RadianceMap,
    cfg: &TrainConfig,
    mut progress: impl FnMut(usize, f64),
) -> Result<(IllumField, FitReport)> {
    cfg.validate()?;
    let mut field = IllumField::new(&cfg.field, cfg.seed)?;
    let mut eval_rng = RngStream::new(cfg.seed, u64::MAX - 1);
    let eval_tuples = regularizer_tuples(cfg.eval_regularizer_batch, &mut eval_rng);
    let eval_lights = light_directions(cfg.eval_light_samples, &mut eval_rng);
    let initial = regularizer_loss(&field, &eval_tuples, &eval_lights)?;
    let mut adam = Adam::new(field.mlp.param_count());
    let mut losses = Vec::with_capacity(cfg.steps);
    for step in 0..cfg.steps {
        let mut rng = RngStream::new(cfg.seed, step as u64);
        let batch = TrainBatch {
            recon: recon_pairs(env, cfg.recon_batch, &mut rng),
            regularizer: regularizer_tuples(cfg.regularizer_batch, &mut rng),
            lights: light_directions(cfg.light_samples, &mut rng),
            lambda_rec: cfg.lambda_rec,
            lambda_d: cfg.lambda_d,
        };
        let (loss, grads) = match loss_and_grad(&field, &batch) {
            Ok(v) => v,
            Err(Error::NonFinite(_)) | Err(Error::DegenerateEstimator(_)) => {
                return Err(Error::Divergence { step, loss: f64::NAN })
            }
            Err(e) => return Err(e),
        };
        if flatten(&grads).iter().any(|g| !g.is_finite()) {
            return Err(Error::Divergence { step, loss });
        }
        let lr = learning_rate(step, cfg.steps, cfg.warmup_steps, cfg.learning_rate, cfg.final_lr_factor);
        adam.step(&mut field.mlp, &grads, lr);
        if field.mlp.check_finite().is_err() {
            return Err(Error::Divergence { step, loss });
        }
        losses.push(loss);
        progress(step, loss);
    }
    let final_ld = regularizer_loss(&field, &eval_tuples, &eval_lights)?;
    Ok((field, FitReport { losses, initial_regularizer_loss: initial, final_regularizer_loss: final_ld }))
}
