//! Renderable scenes and their TOML description.
//!
//! ```toml
//! env = "sky.hdr"
//! mesh = "builtin:sphere"      # or a path to an OBJ file; omit for no geometry
//! seed = 0
//!
//! [material]                   # or `material_table = "table.txt"`
//! albedo = [0.8, 0.8, 0.8]
//! metalness = 0.0
//! roughness = 0.4
//!
//! [camera]
//! position = [0.0, 0.0, 4.0]
//! look_at = [0.0, 0.0, 0.0]
//! up = [0.0, 1.0, 0.0]
//! fov_degrees = 35.0
//! width = 128
//! height = 128
//!
//! [illumination]
//! source = "pyramid"           # pyramid | field | mc
//! pyramid = "pyr/"             # optional pre-baked artifacts
//! field = "sky.illf"
//! lut = "brdf.lut"
//! mc_samples = 8192
//!
//! [occlusion]
//! mode = "none"                # none | mc | baked
//! samples = 64
//! table = "scene.occl"
//!
//! [output]
//! background = "env"           # env | black
//! ```
//!
//! Relative paths resolve against the directory holding the scene file.
//! A material table has one `r g b metalness roughness` line per vertex.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::brdf::Material;
use crate::envmap::{load_hdr, RadianceMap};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::geometry::{default_t_min, load_obj, Bvh, MaterialSource, TriangleMesh};
use crate::math::{Rgb, Vec3};
use crate::occlusion::DEFAULT_OCCLUSION_SAMPLES;
use crate::prefilter::DEFAULT_LIGHT_SAMPLES;
use crate::shading::Camera;

/// Geometry with its materials, ready for ray queries.
#[derive(Debug, Clone)]
pub struct Scene {
    bvh: Bvh,
    materials: MaterialSource,
    t_min: f64,
}

impl Scene {
    pub fn new(mesh: TriangleMesh, materials: MaterialSource) -> Result<Self> {
        materials.validate(&mesh)?;
        let t_min = default_t_min(&mesh);
        Ok(Scene { bvh: Bvh::build(mesh), materials, t_min })
    }

    pub fn with_t_min(mut self, t_min: f64) -> Result<Self> {
        if !(t_min > 0.0 && t_min.is_finite()) {
            return Err(Error::InvalidArgument(format!("t_min must be positive, got {t_min}")));
        }
        self.t_min = t_min;
        Ok(self)
    }

    pub fn bvh(&self) -> &Bvh {
        &self.bvh
    }

    pub fn mesh(&self) -> &TriangleMesh {
        self.bvh.mesh()
    }

    pub fn materials(&self) -> &MaterialSource {
        &self.materials
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum IllumKind {
    #[default]
    Pyramid,
    Field,
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OcclusionKind {
    #[default]
    None,
    Mc,
    Baked,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BackgroundKind {
    #[default]
    Env,
    Black,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    pub albedo: [f64; 3],
    #[serde(default)]
    pub metalness: f64,
    #[serde(default = "default_roughness")]
    pub roughness: f64,
}

fn default_roughness() -> f64 {
    Material::default().roughness
}

impl From<&MaterialConfig> for Material {
    fn from(m: &MaterialConfig) -> Self {
        Material::new(Rgb::from_array(m.albedo), m.metalness, m.roughness)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraConfig {
    pub position: [f64; 3],
    #[serde(default)]
    pub look_at: [f64; 3],
    #[serde(default = "default_up")]
    pub up: [f64; 3],
    #[serde(default = "default_fov")]
    pub fov_degrees: f64,
    pub width: usize,
    pub height: usize,
}

fn default_up() -> [f64; 3] {
    [0.0, 1.0, 0.0]
}

fn default_fov() -> f64 {
    35.0
}

impl CameraConfig {
    pub fn camera(&self) -> Result<Camera> {
        Camera::new(
            Vec3::from_array(self.position),
            Vec3::from_array(self.look_at),
            Vec3::from_array(self.up),
            self.fov_degrees.to_radians(),
            self.width,
            self.height,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IllumConfig {
    pub source: IllumKind,
    pub pyramid: Option<PathBuf>,
    pub field: Option<PathBuf>,
    pub lut: Option<PathBuf>,
    pub mc_samples: usize,
}

impl Default for IllumConfig {
    fn default() -> Self {
        IllumConfig { source: IllumKind::Pyramid, pyramid: None, field: None, lut: None, mc_samples: DEFAULT_LIGHT_SAMPLES }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OcclusionConfig {
    pub mode: OcclusionKind,
    pub samples: usize,
    pub table: Option<PathBuf>,
}

impl Default for OcclusionConfig {
    fn default() -> Self {
        OcclusionConfig { mode: OcclusionKind::None, samples: DEFAULT_OCCLUSION_SAMPLES, table: None }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub background: BackgroundKind,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub env: PathBuf,
    pub mesh: Option<String>,
    pub material: Option<MaterialConfig>,
    pub material_table: Option<PathBuf>,
    pub camera: CameraConfig,
    #[serde(default)]
    pub illumination: IllumConfig,
    #[serde(default)]
    pub occlusion: OcclusionConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: u64,
    /// Directory relative paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

const BUILTIN_PREFIX: &str = "builtin:";

impl SceneConfig {
    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut cfg: SceneConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir.into();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(Error::io_at(path))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.material.is_some() && self.material_table.is_some() {
            return Err(Error::Config("give either `material` or `material_table`, not both".into()));
        }
        if self.illumination.mc_samples == 0 || self.occlusion.samples == 0 {
            return Err(Error::Config("sample counts must be positive".into()));
        }
        if let Some(m) = &self.material {
            Material::from(m).validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        self.camera.camera().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn load_env(&self) -> Result<RadianceMap> {
        RadianceMap::from_image(load_hdr(self.resolve(&self.env))?)
    }

    pub fn load_mesh(&self) -> Result<TriangleMesh> {
        match self.mesh.as_deref() {
            None => Ok(TriangleMesh::empty()),
            Some(name) if name.starts_with(BUILTIN_PREFIX) => builtin_mesh(&name[BUILTIN_PREFIX.len()..]),
            Some(path) => load_obj(self.resolve(Path::new(path))),
        }
    }

    pub fn load_materials(&self) -> Result<MaterialSource> {
        if let Some(table) = &self.material_table {
            let path = self.resolve(table);
            let text = std::fs::read_to_string(&path).map_err(Error::io_at(&path))?;
            return parse_material_table(&text).map(MaterialSource::PerVertex);
        }
        Ok(MaterialSource::Constant(self.material.as_ref().map(Material::from).unwrap_or_default()))
    }

    pub fn load_scene(&self) -> Result<Scene> {
        Scene::new(self.load_mesh()?, self.load_materials()?)
    }
}

/// Meshes available as `builtin:<name>`.
pub fn builtin_mesh(name: &str) -> Result<TriangleMesh> {
    match name {
        "sphere" => Ok(fixtures::unit_sphere()),
        "box" => Ok(fixtures::unit_box()),
        "inward_box" => Ok(fixtures::inward_box()),
        "wall_on_ground" => Ok(fixtures::wall_on_ground()),
        "empty" => Ok(TriangleMesh::empty()),
        _ => Err(Error::Config(format!("unknown builtin mesh `{name}`"))),
    }
}

pub fn parse_material_table(text: &str) -> Result<Vec<Material>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse { line: i + 1, message: format!("{e}") })?;
        let [r, g, b, m, rho] = vals[..] else {
            return Err(Error::Parse { line: i + 1, message: format!("expected 5 values, found {}", vals.len()) });
        };
        let mat = Material::new(Rgb::new(r, g, b), m, rho);
        mat.validate().map_err(|e| Error::Parse { line: i + 1, message: e.to_string() })?;
        out.push(mat);
    }
    Ok(out)
}
