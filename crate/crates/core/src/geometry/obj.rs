//! Minimal Wavefront OBJ reader: `v`, `vn` and `f` records.
//!
//! Polygonal faces are fan-triangulated. When every face vertex references
//! a normal, each distinct `(position, normal)` pair becomes a mesh vertex;
//! otherwise `vn` data is ignored and area-weighted vertex normals are
//! computed. All other record types are skipped.

use std::collections::HashMap;
use std::path::Path;

use super::TriangleMesh;
use crate::error::{Error, Result};
use crate::math::Vec3;

pub fn load_obj(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(Error::io_at(path))?;
    parse_obj(&text)
}

struct FaceVertex {
    position: usize,
    normal: Option<usize>,
}

pub fn parse_obj(text: &str) -> Result<TriangleMesh> {
    let mut positions = Vec::new();
    let mut normals = Vec::new();
    let mut faces: Vec<Vec<FaceVertex>> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |message: String| Error::Parse { line: line_no, message };
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut parts = line.split_whitespace();
        let Some(tag) = parts.next() else { continue };
        match tag {
            "v" | "vn" => {
                let xyz: Vec<f64> = parts
                    .take(3)
                    .map(|s| s.parse::<f64>().map_err(|_| err(format!("bad number `{s}`"))))
                    .collect::<Result<_>>()?;
                if xyz.len() != 3 || xyz.iter().any(|x| !x.is_finite()) {
                    return Err(err(format!("`{tag}` needs three finite coordinates")));
                }
                let v = Vec3::new(xyz[0], xyz[1], xyz[2]);
                if tag == "v" {
                    positions.push(v);
                } else {
                    normals.push(v);
                }
            }
            "f" => {
                let mut face = Vec::new();
                for item in parts {
                    let mut fields = item.split('/');
                    let p = resolve(fields.next(), positions.len()).map_err(|m| err(m))?;
                    let _texcoord = fields.next();
                    let n = match fields.next() {
                        Some(s) if !s.is_empty() => {
                            Some(resolve(Some(s), normals.len()).map_err(|m| err(m))?)
                        }
                        _ => None,
                    };
                    face.push(FaceVertex { position: p, normal: n });
                }
                if face.len() < 3 {
                    return Err(err(format!("face with {} vertices", face.len())));
                }
                faces.push(face);
            }
            _ => {}
        }
    }

    let all_have_normals = !faces.is_empty() && faces.iter().flatten().all(|fv| fv.normal.is_some());
    let mesh = if all_have_normals {
        let mut remap: HashMap<(usize, usize), u32> = HashMap::new();
        let mut verts = Vec::new();
        let mut norms = Vec::new();
        let mut tris = Vec::new();
        let mut index_of = |fv: &FaceVertex| -> Result<u32> {
            let key = (fv.position, fv.normal.unwrap());
            if let Some(&i) = remap.get(&key) {
                return Ok(i);
            }
            let n = normals[key.1];
            if n.length() == 0.0 {
                return Err(Error::Parse { line: 0, message: "zero-length vertex normal".into() });
            }
            let i = verts.len() as u32;
            verts.push(positions[key.0]);
            norms.push(n.normalize());
            remap.insert(key, i);
            Ok(i)
        };
        for face in &faces {
            let first = index_of(&face[0])?;
            for k in 1..face.len() - 1 {
                tris.push([first, index_of(&face[k])?, index_of(&face[k + 1])?]);
            }
        }
        TriangleMesh::new(verts, norms, tris)?
    } else {
        let mut tris = Vec::new();
        for face in &faces {
            for k in 1..face.len() - 1 {
                tris.push([face[0].position, face[k].position, face[k + 1].position].map(|i| i as u32));
            }
        }
        TriangleMesh::with_computed_normals(positions, tris)?
    };
    if mesh.is_empty() {
        return Err(Error::EmptyMesh);
    }
    Ok(mesh)
}

/// Resolves a 1-based (or negative, relative) OBJ index.
fn resolve(field: Option<&str>, count: usize) -> std::result::Result<usize, String> {
    let s = field.filter(|s| !s.is_empty()).ok_or("missing index")?;
    let i: i64 = s.parse().map_err(|_| format!("bad index `{s}`"))?;
    let resolved = if i > 0 { i - 1 } else { count as i64 + i };
    if i == 0 || resolved < 0 || resolved >= count as i64 {
        return Err(format!("index {i} out of range (have {count})"));
    }
    Ok(resolved as usize)
}
