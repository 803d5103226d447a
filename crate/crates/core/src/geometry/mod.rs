//! Occluder geometry: triangle meshes, OBJ loading, a BVH for ray queries
//! and area-weighted surface sampling.

mod bvh;
mod mesh;
mod obj;

pub use bvh::{intersect_brute_force, intersect_triangle, Bvh, Hit, Ray};
pub use mesh::{sample_surface, MaterialSource, SurfacePoint, TriangleMesh};
pub use obj::{load_obj, parse_obj};

use crate::math::Vec3;

/// Default self-intersection offset as a fraction of the scene diagonal.
pub const DEFAULT_T_MIN_FRACTION: f64 = 1e-3;

/// `DEFAULT_T_MIN_FRACTION · diagonal`, with a floor for empty scenes.
pub fn default_t_min(mesh: &TriangleMesh) -> f64 {
    (DEFAULT_T_MIN_FRACTION * mesh.diagonal()).max(1e-6)
}

/// Shading frame at a primary hit seen from direction `wo` (pointing away
/// from the surface).
///
/// The geometric normal is flipped toward the viewer; if the interpolated
/// normal still faces away from `wo` it is replaced by the geometric one, so
/// the returned normal always satisfies `⟨n, wo⟩ > 0` for a front-facing hit.
pub fn shading_frame(mesh: &TriangleMesh, hit: &Hit, wo: Vec3) -> (Vec3, Vec3) {
    let mut ng = mesh.face_normal(hit.triangle);
    if ng.dot(wo) < 0.0 {
        ng = -ng;
    }
    let mut ns = mesh.shading_normal(hit.triangle, hit.u, hit.v);
    if ns.dot(ng) < 0.0 {
        ns = -ns;
    }
    if ns.dot(wo) <= 1e-6 {
        ns = ng;
    }
    (ns, ng)
}
