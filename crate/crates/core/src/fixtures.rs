//! Procedural environments and meshes shared by tests, the CLI and the
//! acceptance suite.

use crate::envmap::{dir_to_uv, RadianceMap};
use crate::geometry::TriangleMesh;
use crate::math::{Rgb, Vec3};

/// Smooth outdoor-like map: a sky gradient, a warm sun lobe and a darker
/// ground.
pub fn standard_env(width: usize) -> RadianceMap {
    let sun = Vec3::new(0.4, 0.6, -0.5).normalize();
    RadianceMap::from_fn(width, |d| {
        let sky = if d.y >= 0.0 {
            Rgb::new(0.35, 0.5, 0.9) * (0.6 + 0.6 * d.y)
        } else {
            Rgb::new(0.3, 0.22, 0.15) * (0.6 - 0.3 * d.y)
        };
        let s = d.dot(sun).max(0.0);
        sky + Rgb::new(1.0, 0.85, 0.6) * (1.5 * s.powi(8))
    })
    .expect("standard env is valid")
}

/// Checkerboard of 16×8 cells in `(u, v)` with three small bright lamps.
pub fn high_frequency_env(width: usize) -> RadianceMap {
    let lamps = [
        (Vec3::new(0.0, 0.7, -0.7).normalize(), Rgb::new(6.0, 5.0, 4.0)),
        (Vec3::new(0.8, 0.2, 0.5).normalize(), Rgb::new(2.0, 4.0, 6.0)),
        (Vec3::new(-0.6, -0.2, -0.7).normalize(), Rgb::new(5.0, 2.0, 2.0)),
    ];
    RadianceMap::from_fn(width, |d| {
        let (u, v) = dir_to_uv(d);
        let on = ((u * 16.0) as usize + (v * 8.0) as usize) % 2 == 0;
        let mut c = if on { Rgb::new(1.0, 0.9, 0.8) } else { Rgb::new(0.1, 0.12, 0.15) };
        for (dir, lamp) in lamps {
            if d.dot(dir) > 0.995 {
                c = lamp;
            }
        }
        c
    })
    .expect("high-frequency env is valid")
}

/// Map that is black except for a single texel.
pub fn single_texel_env(width: usize, col: usize, row: usize, value: Rgb) -> RadianceMap {
    let height = width / 2;
    let mut texels = vec![Rgb::BLACK; width * height];
    texels[row * width + col] = value;
    RadianceMap::new(width, height, texels).expect("single-texel env is valid")
}

/// Unit sphere at the origin, finely tessellated.
pub fn unit_sphere() -> TriangleMesh {
    TriangleMesh::uv_sphere(Vec3::ZERO, 1.0, 64, 128)
}

/// Closed box `[-1, 1]³`.
pub fn unit_box() -> TriangleMesh {
    TriangleMesh::closed_box(Vec3::splat(-1.0), Vec3::splat(1.0))
}

/// The same box with faces pointing inward, so surface points look into
/// the enclosed volume.
pub fn inward_box() -> TriangleMesh {
    unit_box().flipped()
}

/// Wall in the plane `x = 0` covering `y ∈ [-1, extent]`, `z ∈ [-extent, extent]`,
/// facing `+x`. A point just in front of its base at `y = 0` with normal
/// `+y` sees exactly half of its hemisphere blocked.
pub fn half_wall(extent: f64) -> TriangleMesh {
    TriangleMesh::quad(
        Vec3::new(0.0, -1.0, -extent),
        Vec3::new(0.0, extent + 1.0, 0.0),
        Vec3::new(0.0, 0.0, 2.0 * extent),
    )
}

/// Ground square `[-1, 1]²` at `y = 0` facing up, with a unit-height wall
/// along `x = 0` facing `+x` standing on it.
pub fn wall_on_ground() -> TriangleMesh {
    let ground = TriangleMesh::quad(Vec3::new(-1.0, 0.0, -1.0), Vec3::new(0.0, 0.0, 2.0), Vec3::new(2.0, 0.0, 0.0));
    let wall = TriangleMesh::quad(Vec3::new(0.0, 0.0, -1.0), Vec3::new(0.0, 1.0, 0.0), Vec3::new(0.0, 0.0, 2.0));
    ground.merged(&wall)
}
