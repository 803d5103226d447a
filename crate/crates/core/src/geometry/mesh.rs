use crate::brdf::Material;
use crate::error::{Error, Result};
use crate::math::{Vec3, PI};
use crate::sampling::RngStream;

/// Indexed triangle mesh with per-vertex unit normals.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Vec3>,
    normals: Vec<Vec3>,
    triangles: Vec<[u32; 3]>,
}

/// Triangles with area below this are dropped during cleanup.
const MIN_AREA: f64 = 1e-14;

impl TriangleMesh {
    /// Validates indices and normals and drops zero-area triangles.
    pub fn new(vertices: Vec<Vec3>, normals: Vec<Vec3>, triangles: Vec<[u32; 3]>) -> Result<Self> {
        if normals.len() != vertices.len() {
            return Err(Error::InvalidArgument(format!(
                "{} normals for {} vertices",
                normals.len(),
                vertices.len()
            )));
        }
        if let Some(t) = triangles.iter().find(|t| t.iter().any(|&i| i as usize >= vertices.len())) {
            return Err(Error::InvalidArgument(format!("triangle {t:?} indexes past vertex count")));
        }
        if let Some(i) = normals.iter().position(|n| (n.length() - 1.0).abs() > 1e-4) {
            return Err(Error::InvalidArgument(format!("normal {i} is not unit length")));
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("vertex position".into()));
        }
        let mut mesh = TriangleMesh { vertices, normals, triangles };
        mesh.triangles.retain(|t| {
            let [a, b, c] = t.map(|i| mesh.vertices[i as usize]);
            0.5 * (b - a).cross(c - a).length() > MIN_AREA
        });
        Ok(mesh)
    }

    /// Builds a mesh whose normals are the area-weighted average of the
    /// adjacent face normals.
    pub fn with_computed_normals(vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>) -> Result<Self> {
        let mut acc = vec![Vec3::ZERO; vertices.len()];
        for t in &triangles {
            if t.iter().any(|&i| i as usize >= vertices.len()) {
                return Err(Error::InvalidArgument(format!("triangle {t:?} indexes past vertex count")));
            }
            let [a, b, c] = t.map(|i| vertices[i as usize]);
            // cross product length is twice the area, which is the weight we want
            let n = (b - a).cross(c - a);
            for &i in t {
                acc[i as usize] += n;
            }
        }
        let normals = acc
            .into_iter()
            .map(|n| if n.length() > 0.0 { n.normalize() } else { Vec3::Y })
            .collect();
        Self::new(vertices, normals, triangles)
    }

    pub fn empty() -> Self {
        TriangleMesh { vertices: Vec::new(), normals: Vec::new(), triangles: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    #[inline]
    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    #[inline]
    pub fn normals(&self) -> &[Vec3] {
        &self.normals
    }

    #[inline]
    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    #[inline]
    pub fn triangle_positions(&self, tri: usize) -> [Vec3; 3] {
        self.triangles[tri].map(|i| self.vertices[i as usize])
    }

    pub fn triangle_area(&self, tri: usize) -> f64 {
        let [a, b, c] = self.triangle_positions(tri);
        0.5 * (b - a).cross(c - a).length()
    }

    /// Geometric (face) normal following the winding order.
    pub fn face_normal(&self, tri: usize) -> Vec3 {
        let [a, b, c] = self.triangle_positions(tri);
        (b - a).cross(c - a).normalize()
    }

    /// Interpolated, renormalized shading normal at barycentrics `(u, v)`.
    pub fn shading_normal(&self, tri: usize, u: f64, v: f64) -> Vec3 {
        let [a, b, c] = self.triangles[tri].map(|i| self.normals[i as usize]);
        let n = a * (1.0 - u - v) + b * u + c * v;
        if n.length() > 0.0 {
            n.normalize()
        } else {
            self.face_normal(tri)
        }
    }

    pub fn point_at(&self, tri: usize, u: f64, v: f64) -> Vec3 {
        let [a, b, c] = self.triangle_positions(tri);
        a * (1.0 - u - v) + b * u + c * v
    }

    /// Axis-aligned bounds, `None` for an empty mesh.
    pub fn bounds(&self) -> Option<(Vec3, Vec3)> {
        let mut it = self.triangles.iter().flatten().map(|&i| self.vertices[i as usize]);
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), p| (lo.min(p), hi.max(p))))
    }

    /// Length of the bounding-box diagonal; zero for an empty mesh.
    pub fn diagonal(&self) -> f64 {
        self.bounds().map_or(0.0, |(lo, hi)| (hi - lo).length())
    }

    /// Concatenates two meshes.
    pub fn merged(&self, other: &TriangleMesh) -> TriangleMesh {
        let offset = self.vertices.len() as u32;
        let mut vertices = self.vertices.clone();
        vertices.extend_from_slice(&other.vertices);
        let mut normals = self.normals.clone();
        normals.extend_from_slice(&other.normals);
        let mut triangles = self.triangles.clone();
        triangles.extend(other.triangles.iter().map(|t| t.map(|i| i + offset)));
        TriangleMesh { vertices, normals, triangles }
    }

    /// Same surface with reversed winding and negated normals.
    pub fn flipped(&self) -> TriangleMesh {
        TriangleMesh {
            vertices: self.vertices.clone(),
            normals: self.normals.iter().map(|&n| -n).collect(),
            triangles: self.triangles.iter().map(|&[a, b, c]| [a, c, b]).collect(),
        }
    }

    /// Latitude-longitude sphere with analytic normals.
    pub fn uv_sphere(center: Vec3, radius: f64, stacks: usize, slices: usize) -> TriangleMesh {
        assert!(stacks >= 2 && slices >= 3);
        let mut vertices = Vec::new();
        let mut normals = Vec::new();
        for i in 0..=stacks {
            let theta = PI * i as f64 / stacks as f64;
            for j in 0..=slices {
                let phi = 2.0 * PI * j as f64 / slices as f64;
                let n = Vec3::new(theta.sin() * phi.cos(), theta.cos(), theta.sin() * phi.sin());
                vertices.push(center + n * radius);
                normals.push(n);
            }
        }
        let row = slices as u32 + 1;
        let mut triangles = Vec::new();
        for i in 0..stacks as u32 {
            for j in 0..slices as u32 {
                let a = i * row + j;
                let b = a + row;
                // outward winding: (a, a+1, b) has normal pointing away from center
                triangles.push([a, a + 1, b]);
                triangles.push([a + 1, b + 1, b]);
            }
        }
        TriangleMesh::new(vertices, normals, triangles).expect("sphere construction")
    }

    /// Planar quad `origin + s·edge_u + t·edge_v`, `s, t ∈ [0, 1]`, with
    /// normal `edge_u × edge_v`.
    pub fn quad(origin: Vec3, edge_u: Vec3, edge_v: Vec3) -> TriangleMesh {
        let n = edge_u.cross(edge_v).normalize();
        let vertices = vec![origin, origin + edge_u, origin + edge_u + edge_v, origin + edge_v];
        TriangleMesh::new(vertices, vec![n; 4], vec![[0, 1, 2], [0, 2, 3]]).expect("quad construction")
    }

    /// Closed axis-aligned box with outward faces.
    pub fn closed_box(lo: Vec3, hi: Vec3) -> TriangleMesh {
        let d = hi - lo;
        let (dx, dy, dz) = (Vec3::new(d.x, 0.0, 0.0), Vec3::new(0.0, d.y, 0.0), Vec3::new(0.0, 0.0, d.z));
        let faces = [
            TriangleMesh::quad(lo, dy, dx),        // -z
            TriangleMesh::quad(lo + dz, dx, dy),   // +z
            TriangleMesh::quad(lo, dz, dy),        // -x
            TriangleMesh::quad(lo + dx, dy, dz),   // +x
            TriangleMesh::quad(lo, dx, dz),        // -y
            TriangleMesh::quad(lo + dy, dz, dx),   // +y
        ];
        faces.iter().fold(TriangleMesh::empty(), |acc, f| acc.merged(f))
    }
}

/// Position, shading normal and material at a shading location.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub position: Vec3,
    pub normal: Vec3,
    pub material: Material,
}

/// Where sampled points take their material from.
#[derive(Debug, Clone, PartialEq)]
pub enum MaterialSource {
    Constant(Material),
    /// One material per mesh vertex, interpolated barycentrically.
    PerVertex(Vec<Material>),
}

impl MaterialSource {
    pub fn at(&self, mesh: &TriangleMesh, tri: usize, u: f64, v: f64) -> Material {
        match self {
            MaterialSource::Constant(m) => *m,
            MaterialSource::PerVertex(table) => {
                let [a, b, c] = mesh.triangles()[tri].map(|i| table[i as usize]);
                let w = [1.0 - u - v, u, v];
                Material {
                    albedo: a.albedo * w[0] + b.albedo * w[1] + c.albedo * w[2],
                    metalness: a.metalness * w[0] + b.metalness * w[1] + c.metalness * w[2],
                    roughness: a.roughness * w[0] + b.roughness * w[1] + c.roughness * w[2],
                }
            }
        }
    }

    pub fn validate(&self, mesh: &TriangleMesh) -> Result<()> {
        match self {
            MaterialSource::Constant(m) => m.validate(),
            MaterialSource::PerVertex(table) => {
                if table.len() != mesh.vertices().len() {
                    return Err(Error::LengthMismatch(format!(
                        "{} materials for {} vertices",
                        table.len(),
                        mesh.vertices().len()
                    )));
                }
                table.iter().try_for_each(Material::validate)
            }
        }
    }
}

/// Points distributed uniformly by area: triangles chosen proportionally
/// to area, barycentrics uniform inside.
pub fn sample_surface(
    mesh: &TriangleMesh,
    count: usize,
    rng: &mut RngStream,
    materials: &MaterialSource,
) -> Result<Vec<SurfacePoint>> {
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    if mesh.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let mut cdf = Vec::with_capacity(mesh.triangles().len());
    let mut total = 0.0;
    for t in 0..mesh.triangles().len() {
        total += mesh.triangle_area(t);
        cdf.push(total);
    }
    let points = (0..count)
        .map(|_| {
            let x = rng.uniform() * total;
            let tri = cdf.partition_point(|&c| c <= x).min(cdf.len() - 1);
            let (mut u, mut v) = rng.uniform2();
            if u + v > 1.0 {
                u = 1.0 - u;
                v = 1.0 - v;
            }
            SurfacePoint {
                position: mesh.point_at(tri, u, v),
                normal: mesh.shading_normal(tri, u, v),
                material: materials.at(mesh, tri, u, v),
            }
        })
        .collect();
    Ok(points)
}
