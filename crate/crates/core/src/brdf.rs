//! GGX microfacet terms, the metalness Fresnel chain and the split-sum
//! BRDF lookup table.
//!
//! Roughness `ρ` enters the distribution directly as the GGX width, i.e.
//! `D = ρ² / (π (cos²θ_h (ρ² − 1) + 1)²)`.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io_util::{read_f32_le, read_u32_le, write_atomic};
use crate::math::{Rgb, Vec3, INV_PI, PI};
use crate::sampling::RngStream;

/// Surface material in the metalness workflow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Material {
    pub albedo: Rgb,
    pub metalness: f64,
    pub roughness: f64,
}

impl Material {
    pub fn new(albedo: Rgb, metalness: f64, roughness: f64) -> Self {
        Material { albedo, metalness, roughness }
    }

    pub fn validate(&self) -> Result<()> {
        let in01 = |x: f64| (0.0..=1.0).contains(&x);
        if !(in01(self.albedo.r) && in01(self.albedo.g) && in01(self.albedo.b)) {
            return Err(Error::InvalidArgument(format!("albedo out of [0,1]: {:?}", self.albedo)));
        }
        if !in01(self.metalness) || !in01(self.roughness) {
            return Err(Error::InvalidArgument(format!(
                "metalness {} / roughness {} out of [0,1]",
                self.metalness, self.roughness
            )));
        }
        Ok(())
    }
}

impl Default for Material {
    fn default() -> Self {
        Material { albedo: Rgb::splat(0.8), metalness: 0.0, roughness: 0.5 }
    }
}

/// GGX normal distribution at `cos θ_h`.
#[inline]
pub fn ggx_ndf(cos_hn: f64, rho: f64) -> f64 {
    let a2 = rho * rho;
    let d = cos_hn * cos_hn * (a2 - 1.0) + 1.0;
    a2 / (PI * d * d)
}

/// GGX distribution with normal and view collapsed onto the reflection
/// axis, so `cos²θ_h = (1 + t) / 2` with `t = ⟨ω_i, ω_r⟩`.
#[inline]
pub fn ggx_ndf_simplified(t: f64, rho: f64) -> f64 {
    let a2 = rho * rho;
    let d = 0.5 * (1.0 + t) * (a2 - 1.0) + 1.0;
    a2 / (PI * d * d)
}

/// `F0 = (1 − m) · 0.04 + m · a`.
#[inline]
pub fn fresnel_f0(metalness: f64, albedo: Rgb) -> Rgb {
    albedo.map(|a| (1.0 - metalness) * 0.04 + metalness * a)
}

/// Roughness-aware Schlick term `F_r = F0 + (1 − ρ − F0)(1 − ⟨n,v⟩)⁵`,
/// clamped to `[0, 1]` since `1 − ρ − F0` may be negative.
#[inline]
pub fn fresnel_roughness(f0: Rgb, rho: f64, cos_nv: f64) -> Rgb {
    let k = (1.0 - cos_nv.clamp(0.0, 1.0)).powi(5);
    f0.map(|f| (f + (1.0 - rho - f) * k).clamp(0.0, 1.0))
}

/// `k_d = (1 − m)(1 − F_r)`.
#[inline]
pub fn diffuse_weight(metalness: f64, f_r: Rgb) -> Rgb {
    f_r.map(|f| (1.0 - metalness) * (1.0 - f))
}

/// Plain Schlick Fresnel on the microfacet angle.
#[inline]
pub fn fresnel_schlick(f0: Rgb, cos_vh: f64) -> Rgb {
    let k = (1.0 - cos_vh.clamp(0.0, 1.0)).powi(5);
    f0.map(|f| f + (1.0 - f) * k)
}

/// Smith height-correlated GGX visibility `G / (4 ⟨n,l⟩⟨n,v⟩)`.
#[inline]
pub fn smith_visibility(cos_nl: f64, cos_nv: f64, rho: f64) -> f64 {
    let a2 = rho * rho;
    let gv = cos_nl * (cos_nv * cos_nv * (1.0 - a2) + a2).sqrt();
    let gl = cos_nv * (cos_nl * cos_nl * (1.0 - a2) + a2).sqrt();
    0.5 / (gv + gl).max(1e-12)
}

/// Microfacet half vector in the local frame (`z` = normal), sampled with
/// density `D(h) cos θ_h`.
#[inline]
pub fn ggx_half_vector_local(u1: f64, u2: f64, rho: f64) -> Vec3 {
    let a2 = rho * rho;
    let cos2 = ((1.0 - u1) / (1.0 + (a2 - 1.0) * u1)).clamp(0.0, 1.0);
    let cos_t = cos2.sqrt();
    let sin_t = (1.0 - cos2).sqrt();
    let phi = 2.0 * PI * u2;
    Vec3::new(sin_t * phi.cos(), sin_t * phi.sin(), cos_t)
}

/// Full Cook-Torrance specular lobe `D F G / (4 ⟨ω_o,n⟩ ⟨ω_i,n⟩)` with
/// Schlick F on `F0(m, a)` and height-correlated Smith G.
pub fn cook_torrance_fs(wi: Vec3, wo: Vec3, n: Vec3, material: &Material) -> Rgb {
    cook_torrance_with_base(wi, wo, n, material, fresnel_f0(material.metalness, material.albedo))
}

/// Cook-Torrance lobe whose Schlick base is the roughness-aware `F_r` at
/// `⟨n, ω_o⟩` instead of `F0`. Integrated against a constant environment
/// this gives exactly `F_r F1 + F2`, the split-sum specular weight.
pub fn cook_torrance_fs_rough_fresnel(wi: Vec3, wo: Vec3, n: Vec3, material: &Material) -> Rgb {
    let f0 = fresnel_f0(material.metalness, material.albedo);
    let base = fresnel_roughness(f0, material.roughness, wo.dot(n));
    cook_torrance_with_base(wi, wo, n, material, base)
}

fn cook_torrance_with_base(wi: Vec3, wo: Vec3, n: Vec3, material: &Material, base: Rgb) -> Rgb {
    let cos_i = wi.dot(n);
    let cos_o = wo.dot(n);
    if cos_i <= 0.0 || cos_o <= 0.0 {
        return Rgb::BLACK;
    }
    let h = (wi + wo).normalize();
    let rho = material.roughness.max(crate::sampling::RHO_MIN);
    let d = ggx_ndf(h.dot(n).clamp(0.0, 1.0), rho);
    let f = fresnel_schlick(base, wi.dot(h));
    let g = 4.0 * cos_i * cos_o * smith_visibility(cos_i, cos_o, rho);
    f * (d * g / (4.0 * cos_o.max(1e-6) * cos_i.max(1e-6)))
}

/// Lambertian lobe `k_d a / π`.
#[inline]
pub fn lambert(kd: Rgb, albedo: Rgb) -> Rgb {
    kd * albedo * INV_PI
}

const LUT_MAGIC: &[u8; 6] = b"SSLUT1";

/// Split-sum environment BRDF table.
///
/// Cell `(i, j)` holds `(F1, F2)` at `cos θ_v = (i + ½)/N`, `ρ = (j + ½)/N`,
/// stored row-major with roughness along rows, so that
/// `∫ f_s ⟨ω_i,n⟩ dω ≈ F0 · F1 + F2`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrdfLut {
    resolution: usize,
    cells: Vec<[f32; 2]>,
}

impl BrdfLut {
    pub fn from_cells(resolution: usize, cells: Vec<[f32; 2]>) -> Result<Self> {
        if resolution < 2 || cells.len() != resolution * resolution {
            return Err(Error::Format(format!(
                "lut of resolution {resolution} with {} cells",
                cells.len()
            )));
        }
        if cells.iter().any(|c| !c[0].is_finite() || !c[1].is_finite()) {
            return Err(Error::Format("non-finite lut entry".into()));
        }
        Ok(BrdfLut { resolution, cells })
    }

    #[inline]
    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn cells(&self) -> &[[f32; 2]] {
        &self.cells
    }

    #[inline]
    pub fn cell(&self, cos_index: usize, rho_index: usize) -> (f64, f64) {
        let c = self.cells[rho_index * self.resolution + cos_index];
        (c[0] as f64, c[1] as f64)
    }

    /// `(cos θ_v, ρ)` at the center of a cell.
    #[inline]
    pub fn cell_center(&self, cos_index: usize, rho_index: usize) -> (f64, f64) {
        let n = self.resolution as f64;
        ((cos_index as f64 + 0.5) / n, (rho_index as f64 + 0.5) / n)
    }

    /// Bilinear lookup; inputs outside the grid clamp to the edge cells.
    pub fn lookup(&self, cos_nv: f64, rho: f64) -> (f64, f64) {
        let n = self.resolution;
        let to_grid = |v: f64| {
            let v = if v.is_nan() { 0.0 } else { v };
            (v * n as f64 - 0.5).clamp(0.0, (n - 1) as f64)
        };
        let x = to_grid(cos_nv);
        let y = to_grid(rho);
        let x0 = (x.floor() as usize).min(n - 2);
        let y0 = (y.floor() as usize).min(n - 2);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let lerp = |a: (f64, f64), b: (f64, f64), t: f64| {
            (a.0 + (b.0 - a.0) * t, a.1 + (b.1 - a.1) * t)
        };
        let top = lerp(self.cell(x0, y0), self.cell(x0 + 1, y0), fx);
        let bottom = lerp(self.cell(x0, y0 + 1), self.cell(x0 + 1, y0 + 1), fx);
        lerp(top, bottom, fy)
    }

    pub fn write_to(&self, w: &mut dyn Write) -> Result<()> {
        w.write_all(LUT_MAGIC)?;
        w.write_all(&(self.resolution as u32).to_le_bytes())?;
        for c in &self.cells {
            w.write_all(&c[0].to_le_bytes())?;
            w.write_all(&c[1].to_le_bytes())?;
        }
        Ok(())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 10 || &bytes[..6] != LUT_MAGIC {
            return Err(Error::Format("missing SSLUT1 magic".into()));
        }
        let res = read_u32_le(bytes, 6).unwrap() as usize;
        let expected = 10 + 8 * res * res;
        if bytes.len() != expected {
            return Err(Error::Format(format!(
                "lut of resolution {res} needs {expected} bytes, found {}",
                bytes.len()
            )));
        }
        let cells = (0..res * res)
            .map(|k| {
                let off = 10 + 8 * k;
                [read_f32_le(bytes, off).unwrap(), read_f32_le(bytes, off + 4).unwrap()]
            })
            .collect();
        BrdfLut::from_cells(res, cells)
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

pub const DEFAULT_LUT_RESOLUTION: usize = 64;
pub const DEFAULT_LUT_SAMPLES: usize = 1024;

/// Visible-normal sample of the GGX distribution seen from `v` (local
/// frame, `z` = normal). Density of the returned half vector is
/// `G1(v) ⟨v,h⟩⁺ D(h) / ⟨n,v⟩`.
pub fn ggx_visible_normal_local(v: Vec3, u1: f64, u2: f64, rho: f64) -> Vec3 {
    let vh = Vec3::new(rho * v.x, rho * v.y, v.z).normalize();
    let lensq = vh.x * vh.x + vh.y * vh.y;
    let t1 = if lensq > 0.0 {
        Vec3::new(-vh.y, vh.x, 0.0) / lensq.sqrt()
    } else {
        Vec3::X
    };
    let t2 = vh.cross(t1);
    let r = u1.sqrt();
    let phi = 2.0 * PI * u2;
    let p1 = r * phi.cos();
    let s = 0.5 * (1.0 + vh.z);
    let p2 = (1.0 - s) * (1.0 - p1 * p1).max(0.0).sqrt() + s * r * phi.sin();
    let nh = t1 * p1 + t2 * p2 + vh * (1.0 - p1 * p1 - p2 * p2).max(0.0).sqrt();
    Vec3::new(rho * nh.x, rho * nh.y, nh.z.max(1e-12)).normalize()
}

/// Smith masking `G1` for GGX.
#[inline]
pub fn smith_g1(cos: f64, rho: f64) -> f64 {
    let a2 = rho * rho;
    2.0 * cos / (cos + (a2 + (1.0 - a2) * cos * cos).sqrt())
}

/// Monte Carlo estimate of `(F1, F2)` for one `(cos θ_v, ρ)`.
///
/// Half vectors are drawn from the visible-normal distribution on a
/// jittered grid, so each sample carries `w = G2(l, v) / G1(v) ≤ 1`; the
/// Schlick factor `Fc = (1 − ⟨v,h⟩)⁵` splits it into `F1 += (1 − Fc) w`
/// and `F2 += Fc w`.
pub fn integrate_brdf(cos_nv: f64, rho: f64, samples: usize, rng: &mut RngStream) -> (f64, f64) {
    let cos_nv = cos_nv.clamp(1e-4, 1.0);
    let rho = rho.max(crate::sampling::RHO_MIN);
    let v = Vec3::new((1.0 - cos_nv * cos_nv).sqrt(), 0.0, cos_nv);
    let g1v = smith_g1(cos_nv, rho);
    let cols = (samples as f64).sqrt().floor().max(1.0) as usize;
    let rows = samples / cols;
    let stratified = cols * rows;
    let (mut f1, mut f2) = (0.0, 0.0);
    for k in 0..samples {
        let (u1, u2) = if k < stratified {
            let (a, b) = rng.uniform2();
            (((k / cols) as f64 + a) / rows as f64, ((k % cols) as f64 + b) / cols as f64)
        } else {
            rng.uniform2()
        };
        let h = ggx_visible_normal_local(v, u1, u2, rho);
        let vh = v.dot(h);
        let l = h * (2.0 * vh) - v;
        let nl = l.z;
        if nl <= 0.0 || vh <= 0.0 {
            continue;
        }
        let g2 = 4.0 * nl * cos_nv * smith_visibility(nl, cos_nv, rho);
        let w = (g2 / g1v).min(1.0);
        let fc = (1.0 - vh).powi(5);
        f1 += (1.0 - fc) * w;
        f2 += fc * w;
    }
    (f1 / samples as f64, f2 / samples as f64)
}

/// Bakes the table in parallel, cell `k` drawing from stream `k` of `seed`.
pub fn bake_brdf_lut(resolution: usize, samples_per_cell: usize, seed: u64) -> Result<BrdfLut> {
    if resolution < 16 {
        return Err(Error::InvalidArgument(format!("lut resolution {resolution} < 16")));
    }
    if samples_per_cell < 256 {
        return Err(Error::InvalidArgument(format!("{samples_per_cell} samples per cell < 256")));
    }
    let n = resolution as f64;
    let cells = (0..resolution * resolution)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k % resolution, k / resolution);
            let mu = (i as f64 + 0.5) / n;
            let rho = (j as f64 + 0.5) / n;
            let mut rng = RngStream::new(seed, k as u64);
            let (f1, f2) = integrate_brdf(mu, rho, samples_per_cell, &mut rng);
            [f1 as f32, f2 as f32]
        })
        .collect();
    BrdfLut::from_cells(resolution, cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn ndf_substitutions() {
        for rho in [0.1, 0.5, 1.0] {
            assert!(close(ggx_ndf(1.0, rho), 1.0 / (PI * rho * rho), 1e-12));
            assert!(close(ggx_ndf_simplified(1.0, rho), 1.0 / (PI * rho * rho), 1e-12));
        }
        for c in [0.0, 0.3, 1.0] {
            assert!(close(ggx_ndf(c, 1.0), INV_PI, 1e-15));
        }
        for t in [-1.0, 0.0, 0.5] {
            assert!(close(ggx_ndf_simplified(t, 1.0), INV_PI, 1e-15));
        }
    }

    #[test]
    fn ndf_projected_area_is_one() {
        // ∫ D cosθ dω over the hemisphere by midpoint rule in θ
        for rho in [0.1, 0.3, 0.7, 1.0] {
            let n = 200_000;
            let dt = 0.5 * PI / n as f64;
            let s: f64 = (0..n)
                .map(|k| {
                    let t = (k as f64 + 0.5) * dt;
                    ggx_ndf(t.cos(), rho) * t.cos() * t.sin() * 2.0 * PI * dt
                })
                .sum();
            assert!(close(s, 1.0, 1e-2), "rho {rho}: {s}");
        }
    }

    #[test]
    fn simplified_agrees_with_full_on_axis() {
        // with n = ω_o = ω_r the half vector obeys cos²θ_h = (1 + t)/2
        let r = Vec3::Z;
        for (k, rho) in [0.05, 0.3, 0.9].iter().enumerate() {
            let wi = Vec3::new(0.3 * k as f64 + 0.1, -0.2, 0.6).normalize();
            let h = (wi + r).normalize();
            let t = wi.dot(r);
            assert!(close(ggx_ndf(h.dot(r), *rho), ggx_ndf_simplified(t, *rho), 1e-9));
        }
    }

    #[test]
    fn fresnel_chain() {
        assert_eq!(fresnel_f0(0.0, Rgb::new(0.9, 0.1, 0.5)), Rgb::splat(0.04));
        assert_eq!(fresnel_f0(1.0, Rgb::new(1.0, 0.0, 0.0)), Rgb::new(1.0, 0.0, 0.0));
        let f = fresnel_f0(0.5, Rgb::splat(0.5));
        assert!(close(f.r, 0.27, 1e-12));

        let f0 = Rgb::new(0.04, 0.5, 0.9);
        assert_eq!(fresnel_roughness(f0, 0.3, 1.0), f0);
        assert_eq!(fresnel_roughness(f0, 0.0, 0.0), Rgb::splat(1.0));
        let z = fresnel_roughness(f0, 1.0, 0.0);
        assert!(z.max_channel().abs() < 1e-15);

        assert_eq!(diffuse_weight(1.0, Rgb::splat(0.3)), Rgb::BLACK);
        assert_eq!(diffuse_weight(0.0, Rgb::BLACK), Rgb::WHITE);
        let kd = diffuse_weight(0.0, Rgb::splat(0.04));
        assert!(close(kd.g, 0.96, 1e-15));
    }

    #[test]
    fn fresnel_outputs_stay_in_unit_cube() {
        let mut rng = RngStream::new(11, 0);
        for _ in 0..10_000 {
            let a = Rgb::new(rng.uniform(), rng.uniform(), rng.uniform());
            let m = rng.uniform();
            let rho = rng.uniform();
            let c = rng.uniform();
            let f0 = fresnel_f0(m, a);
            let fr = fresnel_roughness(f0, rho, c);
            let kd = diffuse_weight(m, fr);
            for x in [f0, fr, kd] {
                assert!(x.min_channel() >= 0.0 && x.max_channel() <= 1.0);
            }
        }
    }

    #[test]
    fn cook_torrance_reciprocity() {
        let mut rng = RngStream::new(12, 0);
        let n = Vec3::Y;
        let mat = Material::new(Rgb::new(0.9, 0.5, 0.1), 0.7, 0.35);
        for _ in 0..1000 {
            let a = crate::sampling::cos_hemisphere(n, &mut rng).dir;
            let b = crate::sampling::cos_hemisphere(n, &mut rng).dir;
            let x = cook_torrance_fs(a, b, n, &mat);
            let y = cook_torrance_fs(b, a, n, &mat);
            assert!((x - y).to_array().iter().all(|d| d.abs() <= 1e-6 * (1.0 + x.max_channel())));
        }
    }

    #[test]
    fn dielectric_f0_ignores_albedo() {
        let n = Vec3::Z;
        let wo = Vec3::new(0.3, 0.0, 0.9).normalize();
        let wi = Vec3::new(-0.3, 0.1, 0.9).normalize();
        let a = cook_torrance_fs(wi, wo, n, &Material::new(Rgb::new(1.0, 0.0, 0.0), 0.0, 0.4));
        let b = cook_torrance_fs(wi, wo, n, &Material::new(Rgb::new(0.0, 1.0, 0.3), 0.0, 0.4));
        assert_eq!(a, b);
    }

    #[test]
    fn white_furnace_bound() {
        // ∫ f_s cos dω with F0 = 1 by (θ, φ) midpoint quadrature
        let n = Vec3::Z;
        let mat = Material::new(Rgb::WHITE, 1.0, 0.0);
        for rho in [0.2, 0.5, 1.0] {
            for mu in [0.2, 0.6, 1.0] {
                let wo = Vec3::new((1.0f64 - mu * mu).sqrt(), 0.0, mu);
                let m = Material { roughness: rho, ..mat };
                let (nt, np) = (400, 400);
                let mut s = 0.0;
                for a in 0..nt {
                    let t = (a as f64 + 0.5) * 0.5 * PI / nt as f64;
                    for b in 0..np {
                        let p = (b as f64 + 0.5) * 2.0 * PI / np as f64;
                        let wi = Vec3::new(t.sin() * p.cos(), t.sin() * p.sin(), t.cos());
                        s += cook_torrance_fs(wi, wo, n, &m).r * t.cos() * t.sin();
                    }
                }
                s *= (0.5 * PI / nt as f64) * (2.0 * PI / np as f64);
                assert!(s <= 1.0 + 1e-2, "rho {rho} mu {mu}: {s}");
            }
        }
    }

    #[test]
    fn lut_invariants_and_determinism() {
        let lut = bake_brdf_lut(16, 256, 9).unwrap();
        for c in lut.cells() {
            assert!(c[0] >= 0.0 && c[0] <= 1.0 && c[1] >= 0.0 && c[1] <= 1.0);
            assert!(c[0] + c[1] <= 1.0 + 1e-3, "{c:?}");
        }
        assert_eq!(lut, bake_brdf_lut(16, 256, 9).unwrap());
        assert!(bake_brdf_lut(8, 256, 9).is_err());
        assert!(bake_brdf_lut(16, 100, 9).is_err());
    }

    #[test]
    fn lut_lookup_rules() {
        let n = 16;
        let cells = (0..n * n).map(|k| [(k % n) as f32 * 0.01, (k / n) as f32 * 0.02]).collect();
        let lut = BrdfLut::from_cells(n, cells).unwrap();
        let (c, r) = lut.cell_center(3, 5);
        let (f1, f2) = lut.lookup(c, r);
        assert!(close(f1, 0.03, 1e-7) && close(f2, 0.10, 1e-7));
        // clamping below the grid
        assert_eq!(lut.lookup(-0.2, r), lut.lookup(0.5 / n as f64, r));
        // midpoint between cells 3 and 4 along cos
        let (c4, _) = lut.cell_center(4, 5);
        let (m1, _) = lut.lookup(0.5 * (c + c4), r);
        assert!(close(m1, 0.035, 1e-7));
    }

    #[test]
    fn lut_bytes_roundtrip() {
        let lut = bake_brdf_lut(16, 256, 1).unwrap();
        let mut buf = Vec::new();
        lut.write_to(&mut buf).unwrap();
        assert_eq!(buf.len(), 10 + 2 * 4 * 16 * 16);
        assert_eq!(BrdfLut::from_bytes(&buf).unwrap(), lut);
        assert!(BrdfLut::from_bytes(&buf[..buf.len() - 1]).is_err());
        assert!(BrdfLut::from_bytes(b"SSLUT2\0\0\0\0").is_err());
    }

    /// Midpoint quadrature of the split integrands over `ω_i`.
    fn quadrature_f1_f2(mu: f64, rho: f64, nt: usize, np: usize) -> (f64, f64) {
        let v = Vec3::new((1.0 - mu * mu).sqrt(), 0.0, mu);
        let (dt, dp) = (0.5 * PI / nt as f64, 2.0 * PI / np as f64);
        let (mut f1, mut f2) = (0.0, 0.0);
        for a in 0..nt {
            let th = (a as f64 + 0.5) * dt;
            let (st, ct) = th.sin_cos();
            for b in 0..np {
                let ph = (b as f64 + 0.5) * dp;
                let l = Vec3::new(st * ph.cos(), st * ph.sin(), ct);
                let h = (l + v).normalize();
                let d = ggx_ndf(h.z, rho);
                let g = 4.0 * ct * mu * smith_visibility(ct, mu, rho);
                let f = d * g / (4.0 * mu * ct) * ct * st * dt * dp;
                let fc = (1.0 - v.dot(h)).powi(5);
                f1 += (1.0 - fc) * f;
                f2 += fc * f;
            }
        }
        (f1, f2)
    }

    #[test]
    fn lut_matches_quadrature_at_probe_cells() {
        let lut = bake_brdf_lut(DEFAULT_LUT_RESOLUTION, DEFAULT_LUT_SAMPLES, 3).unwrap();
        for i in [16, 32, 48] {
            for j in [16, 32, 48] {
                let (mu, rho) = lut.cell_center(i, j);
                let (q1, q2) = quadrature_f1_f2(mu, rho, 512, 512);
                let (f1, f2) = lut.cell(i, j);
                assert!(close(f1, q1, 1e-2) && close(f2, q2, 1e-2), "{mu} {rho}: {f1} {f2} vs {q1} {q2}");
            }
        }
    }

    #[test]
    fn lut_head_on_trends() {
        let lut = bake_brdf_lut(16, 1024, 5).unwrap();
        let top = lut.resolution() - 1;
        let (_, f2_smooth) = lut.cell(top, 0);
        assert!(f2_smooth < 1e-3, "{f2_smooth}");
        for j in 1..lut.resolution() {
            assert!(lut.cell(top, j).0 <= lut.cell(top, j - 1).0 + 1e-3);
        }
    }
}
