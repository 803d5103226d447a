//! Python bindings.
//!
//! Directions, colors and points cross the boundary as 3-tuples of floats.
//! Images come back as `(width, height, pixels)` with pixels in row-major
//! order, top row first.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use splitsum_core as ss;
use ss::brdf::{bake_brdf_lut, BrdfLut};
use ss::envmap::{load_hdr, save_hdr, save_png_srgb, RadianceMap};
use ss::geometry::{Bvh, SurfacePoint};
use ss::illum_field::{fit, IllumField, TrainConfig};
use ss::prefilter::{bake_pyramid, draw_light_samples, mc_prefilter, PrefilteredPyramid, PyramidConfig};
use ss::sampling::RngStream;
use ss::scene::{builtin_mesh, SceneConfig};
use ss::shading::{render, Background, IllumSource, OcclusionMode, RenderOptions, ShadeTerms};
use ss::{Rgb, Vec3};

type Triple = (f64, f64, f64);

fn err(e: ss::Error) -> PyErr {
    if e.is_io() {
        PyIOError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn v3(t: Triple) -> Vec3 {
    Vec3::new(t.0, t.1, t.2)
}

fn rgb(t: Triple) -> Rgb {
    Rgb::new(t.0, t.1, t.2)
}

fn tup(c: Rgb) -> Triple {
    (c.r, c.g, c.b)
}

/// Linear RGB image.
#[pyclass(name = "Image", frozen)]
struct PyImage(ss::envmap::Image);

#[pymethods]
impl PyImage {
    #[staticmethod]
    fn load_hdr(path: PathBuf) -> PyResult<Self> {
        load_hdr(path).map(PyImage).map_err(err)
    }

    #[getter]
    fn width(&self) -> usize {
        self.0.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.0.height()
    }

    fn pixel(&self, x: usize, y: usize) -> PyResult<Triple> {
        if x >= self.0.width() || y >= self.0.height() {
            return Err(PyValueError::new_err("pixel index out of range"));
        }
        Ok(tup(self.0.get(x, y)))
    }

    fn pixels(&self) -> Vec<Triple> {
        self.0.pixels().iter().map(|&p| tup(p)).collect()
    }

    fn save_hdr(&self, path: PathBuf) -> PyResult<()> {
        save_hdr(&self.0, path).map_err(err)
    }

    #[pyo3(signature = (path, exposure = 1.0))]
    fn save_png(&self, path: PathBuf, exposure: f64) -> PyResult<()> {
        save_png_srgb(&self.0, path, exposure).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Image({}x{})", self.0.width(), self.0.height())
    }
}

/// Equirectangular environment map.
#[pyclass(name = "RadianceMap", frozen)]
struct PyRadianceMap(RadianceMap);

#[pymethods]
impl PyRadianceMap {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let image = load_hdr(path).map_err(err)?;
        RadianceMap::from_image(image).map(PyRadianceMap).map_err(err)
    }

    #[staticmethod]
    fn constant(width: usize, color: Triple) -> PyResult<Self> {
        if width < 2 || width % 2 != 0 {
            return Err(PyValueError::new_err("width must be even and at least 2"));
        }
        Ok(PyRadianceMap(RadianceMap::constant(width, rgb(color))))
    }

    /// Built-in test environments: `standard` or `high_frequency`.
    #[staticmethod]
    #[pyo3(signature = (name, width = 64))]
    fn fixture(name: &str, width: usize) -> PyResult<Self> {
        match name {
            "standard" => Ok(PyRadianceMap(ss::fixtures::standard_env(width))),
            "high_frequency" => Ok(PyRadianceMap(ss::fixtures::high_frequency_env(width))),
            _ => Err(PyValueError::new_err(format!("unknown environment fixture `{name}`"))),
        }
    }

    #[getter]
    fn width(&self) -> usize {
        self.0.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.0.height()
    }

    fn sample(&self, direction: Triple) -> Triple {
        tup(self.0.sample_bilinear(v3(direction).normalize()))
    }

    fn image(&self) -> PyImage {
        PyImage(self.0.image().clone())
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        save_hdr(self.0.image(), path).map_err(err)
    }

    /// Monte Carlo estimate of the prefiltered radiance about `axis`.
    #[pyo3(signature = (axis, roughness, samples = 8192, seed = 0))]
    fn prefilter(&self, axis: Triple, roughness: f64, samples: usize, seed: u64) -> PyResult<Triple> {
        let lights = draw_light_samples(&self.0, samples, &mut RngStream::new(seed, 0));
        mc_prefilter(&self.0, v3(axis).normalize(), roughness, &lights).map(tup).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("RadianceMap({}x{})", self.0.width(), self.0.height())
    }
}

/// Prefiltered environment at a ladder of roughness values.
#[pyclass(name = "Pyramid", frozen)]
struct PyPyramid(PrefilteredPyramid);

#[pymethods]
impl PyPyramid {
    #[staticmethod]
    #[pyo3(signature = (env, levels = 6, samples = 8192, width = None, seed = 0))]
    fn bake(env: &PyRadianceMap, levels: usize, samples: usize, width: Option<usize>, seed: u64) -> PyResult<Self> {
        let cfg = PyramidConfig { levels, samples_per_texel: samples, level_width: width, seed };
        bake_pyramid(&env.0, &cfg).map(PyPyramid).map_err(err)
    }

    #[staticmethod]
    fn load(dir: PathBuf) -> PyResult<Self> {
        PrefilteredPyramid::load(dir).map(PyPyramid).map_err(err)
    }

    fn save(&self, dir: PathBuf) -> PyResult<()> {
        self.0.save(dir).map_err(err)
    }

    #[getter]
    fn roughness_levels(&self) -> Vec<f64> {
        self.0.levels().iter().map(|(rho, _)| *rho).collect()
    }

    fn lookup(&self, direction: Triple, roughness: f64) -> Triple {
        tup(self.0.lookup(v3(direction).normalize(), roughness))
    }
}

/// Split-sum BRDF table indexed by `(n·v, roughness)`.
#[pyclass(name = "BrdfLut", frozen)]
struct PyBrdfLut(BrdfLut);

#[pymethods]
impl PyBrdfLut {
    #[staticmethod]
    #[pyo3(signature = (resolution = 64, samples = 1024, seed = 0))]
    fn bake(resolution: usize, samples: usize, seed: u64) -> PyResult<Self> {
        bake_brdf_lut(resolution, samples, seed).map(PyBrdfLut).map_err(err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        BrdfLut::load(path).map(PyBrdfLut).map_err(err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.0.save(path).map_err(err)
    }

    #[getter]
    fn resolution(&self) -> usize {
        self.0.resolution()
    }

    /// `(F1, F2)` at the given cosine and roughness.
    fn lookup(&self, cos_nv: f64, roughness: f64) -> (f64, f64) {
        self.0.lookup(cos_nv, roughness)
    }
}

/// Neural illumination field.
#[pyclass(name = "IllumField", frozen)]
struct PyIllumField(IllumField);

#[pymethods]
impl PyIllumField {
    /// Fits a field to `env`. Returns the field and the per-step losses.
    #[staticmethod]
    #[pyo3(signature = (env, steps = 2000, seed = 0))]
    fn fit(py: Python<'_>, env: &PyRadianceMap, steps: usize, seed: u64) -> PyResult<(Self, Vec<f64>)> {
        let cfg = TrainConfig { steps, seed, ..Default::default() };
        let (field, report) = py.detach(|| fit(&env.0, &cfg)).map_err(err)?;
        Ok((PyIllumField(field), report.losses))
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        IllumField::load(path).map(PyIllumField).map_err(err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.0.save(path).map_err(err)
    }

    fn evaluate(&self, direction: Triple, roughness: f64) -> PyResult<Triple> {
        self.0.forward(v3(direction).normalize(), roughness).map(tup).map_err(err)
    }

    /// Renders the field at one roughness into an environment map.
    #[pyo3(signature = (roughness, width = 64))]
    fn export(&self, roughness: f64, width: usize) -> PyResult<PyRadianceMap> {
        self.0.export_envmap(roughness, width).map(PyRadianceMap).map_err(err)
    }
}

/// Diffuse and specular occlusion at a point on a built-in mesh.
///
/// Returns `((o_d r, g, b), (o_s r, g, b))`.
#[pyfunction]
#[pyo3(signature = (mesh, env, point, normal, roughness = 0.5, samples = 64, seed = 0))]
fn occlusion(
    mesh: &str,
    env: &PyRadianceMap,
    point: Triple,
    normal: Triple,
    roughness: f64,
    samples: usize,
    seed: u64,
) -> PyResult<(Triple, Triple)> {
    let mesh = builtin_mesh(mesh).map_err(err)?;
    let t_min = ss::geometry::default_t_min(&mesh);
    let bvh = Bvh::build(mesh);
    let material = ss::brdf::Material::new(Rgb::WHITE, 0.0, roughness);
    let sp = SurfacePoint { position: v3(point), normal: v3(normal).normalize(), material };
    let est = ss::occlusion::estimate_occlusion(&sp, &env.0, Some(&bvh), samples, t_min, &mut RngStream::new(seed, 0))
        .map_err(err)?;
    Ok((tup(est.o_d), tup(est.o_s)))
}

/// Renders a TOML scene with split-sum shading.
///
/// `illumination` is `pyramid` or `field` (the latter needs a field path in
/// the scene); `occlusion` is `none` or `mc`.
#[pyfunction]
#[pyo3(signature = (scene, illumination = "pyramid", occlusion = "none"))]
fn render_scene(py: Python<'_>, scene: PathBuf, illumination: &str, occlusion: &str) -> PyResult<PyImage> {
    let cfg = SceneConfig::load(&scene).map_err(err)?;
    let env = cfg.load_env().map_err(err)?;
    let scn = cfg.load_scene().map_err(err)?;
    let camera = cfg.camera.camera().map_err(err)?;
    let illum = match illumination {
        "pyramid" => {
            let pyramid = match &cfg.illumination.pyramid {
                Some(p) => PrefilteredPyramid::load(cfg.resolve(p)).map_err(err)?,
                None => {
                    let pc = PyramidConfig { level_width: Some(env.width().min(64)), seed: cfg.seed, ..Default::default() };
                    py.detach(|| bake_pyramid(&env, &pc)).map_err(err)?
                }
            };
            IllumSource::Pyramid(pyramid)
        }
        "field" => {
            let path = cfg
                .illumination
                .field
                .as_ref()
                .ok_or_else(|| PyValueError::new_err("scene has no `illumination.field`"))?;
            IllumSource::Field(IllumField::load(cfg.resolve(path)).map_err(err)?)
        }
        other => return Err(PyValueError::new_err(format!("unknown illumination `{other}`"))),
    };
    let occ = match occlusion {
        "none" => OcclusionMode::None,
        "mc" => OcclusionMode::Mc { env: &env, samples: cfg.occlusion.samples },
        other => return Err(PyValueError::new_err(format!("unknown occlusion mode `{other}`"))),
    };
    let lut = match &cfg.illumination.lut {
        Some(p) => BrdfLut::load(cfg.resolve(p)).map_err(err)?,
        None => py.detach(|| bake_brdf_lut(64, 1024, 0)).map_err(err)?,
    };
    let background = match cfg.output.background {
        ss::scene::BackgroundKind::Env => Background::Env(&env),
        ss::scene::BackgroundKind::Black => Background::Black,
    };
    let opts = RenderOptions { occlusion: occ, background, terms: ShadeTerms::ALL, seed: cfg.seed };
    let out = py.detach(|| render(&scn, &camera, &illum, &lut, &opts)).map_err(err)?;
    Ok(PyImage(out.image))
}

/// PSNR of `candidate` against `reference`; `inf` when identical.
#[pyfunction]
#[pyo3(signature = (reference, candidate, channel_scale = false))]
fn psnr(reference: &PyImage, candidate: &PyImage, channel_scale: bool) -> PyResult<f64> {
    ss::metrics::compare(&reference.0, &candidate.0, channel_scale).map(|c| c.psnr).map_err(err)
}

#[pymodule]
fn splitsum(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyImage>()?;
    m.add_class::<PyRadianceMap>()?;
    m.add_class::<PyPyramid>()?;
    m.add_class::<PyBrdfLut>()?;
    m.add_class::<PyIllumField>()?;
    m.add_function(wrap_pyfunction!(occlusion, m)?)?;
    m.add_function(wrap_pyfunction!(render_scene, m)?)?;
    m.add_function(wrap_pyfunction!(psnr, m)?)?;
    Ok(())
}
