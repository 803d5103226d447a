//! Seeded direction samplers with exact densities.
//!
//! Every sampler returns the direction together with its probability
//! density with respect to solid angle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::brdf::ggx_ndf_simplified;
use crate::error::{Error, Result};
use crate::math::{Vec3, INV_PI, PI};

/// Smallest roughness the GGX-lobe sampler accepts; below this the lobe is
/// treated as a delta by callers.
pub const RHO_MIN: f64 = 1e-3;

/// A reproducible random stream identified by `(seed, stream)`.
///
/// Streams with the same seed but different ids are independent, so
/// per-pixel or per-texel work can draw from `RngStream::new(seed, index)`
/// and produce identical results regardless of how it is scheduled.
#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        RngStream { rng }
    }

    /// Uniform in `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    #[inline]
    pub fn uniform2(&mut self) -> (f64, f64) {
        (self.uniform(), self.uniform())
    }

    #[inline]
    pub fn below(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    /// Standard normal via Box-Muller.
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// A sampled direction and its solid-angle density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirSample {
    pub dir: Vec3,
    pub pdf: f64,
}

/// Orthonormal frame with `normal` as the third axis.
#[derive(Debug, Clone, Copy)]
pub struct Onb {
    pub tangent: Vec3,
    pub bitangent: Vec3,
    pub normal: Vec3,
}

impl Onb {
    /// Branchless construction (Duff et al. 2017), valid for every unit `n`
    /// including `(0, 0, -1)`. Right-handed: `tangent × bitangent = normal`.
    pub fn from_normal(n: Vec3) -> Onb {
        let sign = 1f64.copysign(n.z);
        let a = -1.0 / (sign + n.z);
        let b = n.x * n.y * a;
        let tangent = Vec3::new(1.0 + sign * n.x * n.x * a, sign * b, -sign * n.x);
        let bitangent = Vec3::new(b, sign + n.y * n.y * a, -n.y);
        Onb { tangent, bitangent, normal: n }
    }

    #[inline]
    pub fn to_world(&self, local: Vec3) -> Vec3 {
        self.tangent * local.x + self.bitangent * local.y + self.normal * local.z
    }
}

pub fn build_onb(n: Vec3) -> Onb {
    Onb::from_normal(n)
}

/// Direction uniform on the unit sphere; density `1 / 4π`.
pub fn uniform_sphere(rng: &mut RngStream) -> DirSample {
    let (u1, u2) = rng.uniform2();
    let z = 1.0 - 2.0 * u1;
    let r = (1.0 - z * z).max(0.0).sqrt();
    let phi = 2.0 * PI * u2;
    DirSample { dir: Vec3::new(r * phi.cos(), r * phi.sin(), z), pdf: 1.0 / (4.0 * PI) }
}

/// Concentric disk mapping of `[0,1)²` (Shirley-Chiu).
fn concentric_disk(u1: f64, u2: f64) -> (f64, f64) {
    let a = 2.0 * u1 - 1.0;
    let b = 2.0 * u2 - 1.0;
    if a == 0.0 && b == 0.0 {
        return (0.0, 0.0);
    }
    let (r, theta) = if a.abs() > b.abs() {
        (a, PI / 4.0 * (b / a))
    } else {
        (b, PI / 2.0 - PI / 4.0 * (a / b))
    };
    (r * theta.cos(), r * theta.sin())
}

/// Cosine-weighted direction in the hemisphere of `n`; density `⟨dir, n⟩ / π`.
pub fn cos_hemisphere(n: Vec3, rng: &mut RngStream) -> DirSample {
    let (u1, u2) = rng.uniform2();
    let (x, y) = concentric_disk(u1, u2);
    let z = (1.0 - x * x - y * y).max(0.0).sqrt();
    let dir = Onb::from_normal(n).to_world(Vec3::new(x, y, z));
    DirSample { dir, pdf: cos_hemisphere_pdf(dir.dot(n)) }
}

#[inline]
pub fn cos_hemisphere_pdf(cos: f64) -> f64 {
    cos.max(0.0) * INV_PI
}

/// Density of the simplified GGX lobe at `t = ⟨dir, axis⟩`: `D_simplified(t, ρ) / 4`.
#[inline]
pub fn ggx_lobe_pdf(t: f64, rho: f64) -> f64 {
    ggx_ndf_simplified(t, rho) / 4.0
}

/// Inverse CDF of the lobe marginal in `s = (1 + t) / 2`.
///
/// The marginal density in `s` is `ρ² / (1 + s(ρ² − 1))²`, whose CDF is
/// `ρ² s / (1 + s(ρ² − 1))`.
#[inline]
pub fn ggx_lobe_inverse_cdf(u: f64, rho: f64) -> f64 {
    let a2 = rho * rho;
    let s = u / (a2 + u * (1.0 - a2));
    2.0 * s.clamp(0.0, 1.0) - 1.0
}

/// Direction drawn from the simplified GGX lobe about `axis` over the full
/// sphere, density `D_simplified(⟨dir, axis⟩, ρ) / 4`.
pub fn ggx_lobe(axis: Vec3, rho: f64, rng: &mut RngStream) -> Result<DirSample> {
    if !(rho >= RHO_MIN) || rho > 1.0 {
        return Err(Error::RoughnessBelowMinimum(rho));
    }
    let (u1, u2) = rng.uniform2();
    let t = ggx_lobe_inverse_cdf(u1, rho);
    let sin_t = (1.0 - t * t).max(0.0).sqrt();
    let phi = 2.0 * PI * u2;
    let local = Vec3::new(sin_t * phi.cos(), sin_t * phi.sin(), t);
    let dir = Onb::from_normal(axis).to_world(local);
    Ok(DirSample { dir, pdf: ggx_lobe_pdf(t, rho) })
}
