//! Binary bounding-volume hierarchy over a [`TriangleMesh`].
//!
//! Built top-down with a binned surface-area heuristic and flattened into a
//! depth-first node array; the second child of an interior node is stored at
//! an explicit offset.

use super::TriangleMesh;
use crate::error::{Error, Result};
use crate::math::Vec3;

/// Determinant magnitude below which a ray is treated as parallel.
const DET_EPSILON: f64 = 1e-9;
const LEAF_SIZE: usize = 4;
const BINS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub dir: Vec3,
    pub t_min: f64,
    pub t_max: f64,
}

impl Ray {
    pub fn new(origin: Vec3, dir: Vec3, t_min: f64, t_max: f64) -> Result<Self> {
        if !(t_min >= 0.0) || !(t_min < t_max) {
            return Err(Error::InvalidArgument(format!("bad ray interval ({t_min}, {t_max})")));
        }
        if (dir.length() - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidArgument("ray direction is not unit length".into()));
        }
        Ok(Ray { origin, dir, t_min, t_max })
    }

    /// Unbounded ray starting at `t_min`.
    pub fn from(origin: Vec3, dir: Vec3, t_min: f64) -> Self {
        Ray { origin, dir, t_min, t_max: f64::INFINITY }
    }

    #[inline]
    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.dir * t
    }
}

/// Nearest intersection: triangle index, distance and barycentrics of
/// vertices 1 and 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub triangle: usize,
    pub t: f64,
    pub u: f64,
    pub v: f64,
}

/// Two-sided Möller-Trumbore test. Returns `(t, u, v)` for `t` inside the
/// open interval `(t_min, t_max)`.
#[inline]
pub fn intersect_triangle(ray: &Ray, a: Vec3, b: Vec3, c: Vec3) -> Option<(f64, f64, f64)> {
    let e1 = b - a;
    let e2 = c - a;
    let p = ray.dir.cross(e2);
    let det = e1.dot(p);
    if det.abs() < DET_EPSILON {
        return None;
    }
    let inv = 1.0 / det;
    let s = ray.origin - a;
    let u = s.dot(p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(e1);
    let v = ray.dir.dot(q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(q) * inv;
    (t > ray.t_min && t < ray.t_max).then_some((t, u, v))
}

#[derive(Debug, Clone, Copy)]
struct Aabb {
    lo: Vec3,
    hi: Vec3,
}

impl Aabb {
    const EMPTY: Aabb = Aabb { lo: Vec3::splat(f64::INFINITY), hi: Vec3::splat(f64::NEG_INFINITY) };

    fn grow(self, p: Vec3) -> Aabb {
        Aabb { lo: self.lo.min(p), hi: self.hi.max(p) }
    }

    fn union(self, o: Aabb) -> Aabb {
        Aabb { lo: self.lo.min(o.lo), hi: self.hi.max(o.hi) }
    }

    fn area(self) -> f64 {
        let d = self.hi - self.lo;
        if d.x < 0.0 {
            return 0.0;
        }
        2.0 * (d.x * d.y + d.y * d.z + d.z * d.x)
    }

    /// Slab test against `(t_min, t_max)`; returns the entry distance.
    #[inline]
    fn hit(&self, origin: Vec3, inv_dir: Vec3, t_min: f64, t_max: f64) -> Option<f64> {
        let mut t0 = t_min;
        let mut t1 = t_max;
        for k in 0..3 {
            let a = (self.lo[k] - origin[k]) * inv_dir[k];
            let b = (self.hi[k] - origin[k]) * inv_dir[k];
            let (near, far) = if a < b { (a, b) } else { (b, a) };
            // NaN from 0 * inf leaves the bound untouched
            if near > t0 {
                t0 = near;
            }
            if far < t1 {
                t1 = far;
            }
        }
        // small slack so hits lying exactly on a slab face are not culled
        (t0 <= t1 * (1.0 + 1e-12) + 1e-12).then_some(t0)
    }
}

#[derive(Debug, Clone, Copy)]
struct Node {
    bounds: Aabb,
    /// Leaf: first primitive index. Interior: index of the second child.
    offset: u32,
    /// Zero for interior nodes.
    count: u32,
}

/// Ray-acceleration index over a mesh. Immutable after build.
#[derive(Debug, Clone)]
pub struct Bvh {
    mesh: TriangleMesh,
    nodes: Vec<Node>,
    order: Vec<u32>,
}

struct BuildPrim {
    bounds: Aabb,
    centroid: Vec3,
    index: u32,
}

impl Bvh {
    pub fn build(mesh: TriangleMesh) -> Bvh {
        let mut prims: Vec<BuildPrim> = (0..mesh.triangles().len())
            .map(|t| {
                let [a, b, c] = mesh.triangle_positions(t);
                let bounds = Aabb::EMPTY.grow(a).grow(b).grow(c);
                BuildPrim { bounds, centroid: (a + b + c) / 3.0, index: t as u32 }
            })
            .collect();
        let mut nodes = Vec::with_capacity(2 * prims.len().max(1));
        if !prims.is_empty() {
            let n = prims.len();
            build_recursive(&mut prims, 0, n, &mut nodes);
        }
        let order = prims.iter().map(|p| p.index).collect();
        Bvh { mesh, nodes, order }
    }

    pub fn mesh(&self) -> &TriangleMesh {
        &self.mesh
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nearest hit in `(ray.t_min, ray.t_max)`.
    pub fn intersect(&self, ray: &Ray) -> Option<Hit> {
        self.traverse(ray, false)
    }

    /// True iff anything is hit along `(t_min, ∞)`. Visibility is `1 − occluded`.
    pub fn occluded(&self, origin: Vec3, dir: Vec3, t_min: f64) -> bool {
        self.traverse(&Ray::from(origin, dir, t_min), true).is_some()
    }

    fn traverse(&self, ray: &Ray, any_hit: bool) -> Option<Hit> {
        if self.nodes.is_empty() {
            return None;
        }
        let inv = Vec3::new(1.0 / ray.dir.x, 1.0 / ray.dir.y, 1.0 / ray.dir.z);
        let mut best: Option<Hit> = None;
        let mut t_max = ray.t_max;
        let mut stack = [0u32; 64];
        let mut sp = 0;
        let mut node = 0usize;
        loop {
            let n = &self.nodes[node];
            if n.bounds.hit(ray.origin, inv, ray.t_min, t_max).is_some() {
                if n.count > 0 {
                    for k in n.offset..n.offset + n.count {
                        let tri = self.order[k as usize] as usize;
                        let [a, b, c] = self.mesh.triangle_positions(tri);
                        let r = Ray { t_max, ..*ray };
                        if let Some((t, u, v)) = intersect_triangle(&r, a, b, c) {
                            t_max = t;
                            best = Some(Hit { triangle: tri, t, u, v });
                            if any_hit {
                                return best;
                            }
                        }
                    }
                } else {
                    // visit the nearer child first
                    let (first, second) = (node + 1, n.offset as usize);
                    let d1 = self.nodes[first].bounds.hit(ray.origin, inv, ray.t_min, t_max);
                    let d2 = self.nodes[second].bounds.hit(ray.origin, inv, ray.t_min, t_max);
                    match (d1, d2) {
                        (Some(a), Some(b)) => {
                            let (near, far) = if a <= b { (first, second) } else { (second, first) };
                            stack[sp] = far as u32;
                            sp += 1;
                            node = near;
                            continue;
                        }
                        (Some(_), None) => {
                            node = first;
                            continue;
                        }
                        (None, Some(_)) => {
                            node = second;
                            continue;
                        }
                        (None, None) => {}
                    }
                }
            }
            if sp == 0 {
                break;
            }
            sp -= 1;
            node = stack[sp] as usize;
        }
        best
    }
}

fn build_recursive(prims: &mut [BuildPrim], start: usize, end: usize, nodes: &mut Vec<Node>) -> usize {
    let slice = &mut prims[start..end];
    let bounds = slice.iter().fold(Aabb::EMPTY, |b, p| b.union(p.bounds));
    let node_index = nodes.len();
    nodes.push(Node { bounds, offset: start as u32, count: (end - start) as u32 });
    if slice.len() <= LEAF_SIZE {
        return node_index;
    }
    let cb = slice.iter().fold(Aabb::EMPTY, |b, p| b.grow(p.centroid));
    let extent = cb.hi - cb.lo;
    let axis = if extent.x >= extent.y && extent.x >= extent.z {
        0
    } else if extent.y >= extent.z {
        1
    } else {
        2
    };
    if extent[axis] <= 0.0 {
        // all centroids coincide: split in the middle
        let mid = slice.len() / 2;
        return finish_split(prims, start, start + mid, end, node_index, nodes);
    }

    // binned SAH along the longest centroid axis
    let bin_of = |c: Vec3| {
        let f = (c[axis] - cb.lo[axis]) / extent[axis];
        ((f * BINS as f64) as usize).min(BINS - 1)
    };
    let mut bin_bounds = [Aabb::EMPTY; BINS];
    let mut bin_counts = [0usize; BINS];
    for p in slice.iter() {
        let b = bin_of(p.centroid);
        bin_bounds[b] = bin_bounds[b].union(p.bounds);
        bin_counts[b] += 1;
    }
    let mut best_cost = f64::INFINITY;
    let mut best_split = BINS / 2;
    for split in 1..BINS {
        let (mut lb, mut lc) = (Aabb::EMPTY, 0);
        for k in 0..split {
            lb = lb.union(bin_bounds[k]);
            lc += bin_counts[k];
        }
        let (mut rb, mut rc) = (Aabb::EMPTY, 0);
        for k in split..BINS {
            rb = rb.union(bin_bounds[k]);
            rc += bin_counts[k];
        }
        if lc == 0 || rc == 0 {
            continue;
        }
        let cost = lb.area() * lc as f64 + rb.area() * rc as f64;
        if cost < best_cost {
            best_cost = cost;
            best_split = split;
        }
    }
    let mut mid = partition(slice, |p| bin_of(p.centroid) < best_split);
    if mid == 0 || mid == slice.len() {
        mid = slice.len() / 2;
        slice.sort_by(|a, b| a.centroid[axis].total_cmp(&b.centroid[axis]));
    }
    finish_split(prims, start, start + mid, end, node_index, nodes)
}

fn finish_split(
    prims: &mut [BuildPrim],
    start: usize,
    mid: usize,
    end: usize,
    node_index: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    build_recursive(prims, start, mid, nodes);
    let second = build_recursive(prims, mid, end, nodes);
    nodes[node_index].offset = second as u32;
    nodes[node_index].count = 0;
    node_index
}

fn partition<T>(slice: &mut [T], pred: impl Fn(&T) -> bool) -> usize {
    let mut i = 0;
    for j in 0..slice.len() {
        if pred(&slice[j]) {
            slice.swap(i, j);
            i += 1;
        }
    }
    i
}

/// Reference nearest-hit query testing every triangle.
pub fn intersect_brute_force(mesh: &TriangleMesh, ray: &Ray) -> Option<Hit> {
    let mut best: Option<Hit> = None;
    let mut r = *ray;
    for tri in 0..mesh.triangles().len() {
        let [a, b, c] = mesh.triangle_positions(tri);
        if let Some((t, u, v)) = intersect_triangle(&r, a, b, c) {
            r.t_max = t;
            best = Some(Hit { triangle: tri, t, u, v });
        }
    }
    best
}
