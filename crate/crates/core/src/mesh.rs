//! Triangle mesh loading, validation and canonical normalization.
//!
//! Meshes are read from ASCII OBJ or binary/ASCII STL. Coordinates are kept
//! as `f32` so the canonical OBJ writer (9 significant digits) round-trips
//! bit-exactly.

use std::collections::HashMap;
use std::fmt::Write as _;

use nalgebra::Vector3;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MeshError {
    #[error("malformed record on line {line}: {message}")]
    MalformedRecord { line: usize, message: String },
    #[error("vertex index {index} out of range (vertex count {count}) on line {line}")]
    IndexOutOfRange { line: usize, index: i64, count: usize },
    #[error("mesh has no triangles or fewer than 3 vertices")]
    EmptyMesh,
    #[error("STL file truncated: expected {expected} bytes, got {actual}")]
    TruncatedFile { expected: usize, actual: usize },
    #[error("STL declares {declared} triangles but contains {found}")]
    CountMismatch { declared: usize, found: usize },
    #[error("all vertices coincide; mesh cannot be normalized")]
    DegenerateMesh,
    #[error("invalid mesh: {0}")]
    Invalid(String),
}

pub type MeshResult<T> = Result<T, MeshError>;

/// An item geometry: vertices plus index triples.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub id: String,
    pub vertices: Vec<[f32; 3]>,
    pub triangles: Vec<[u32; 3]>,
}

impl TriangleMesh {
    /// Builds a mesh and checks the structural invariants.
    pub fn new(
        id: impl Into<String>,
        vertices: Vec<[f32; 3]>,
        triangles: Vec<[u32; 3]>,
    ) -> MeshResult<Self> {
        let mesh = Self { id: id.into(), vertices, triangles };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn validate(&self) -> MeshResult<()> {
        if self.triangles.is_empty() || self.vertices.len() < 3 {
            return Err(MeshError::EmptyMesh);
        }
        let n = self.vertices.len();
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&i| i as usize >= n) {
                return Err(MeshError::Invalid(format!("triangle {t} references a missing vertex")));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::Invalid(format!("triangle {t} repeats a vertex")));
            }
        }
        if self.vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(MeshError::Invalid("non-finite vertex coordinate".into()));
        }
        Ok(())
    }

    pub fn vertex(&self, i: usize) -> Vector3<f64> {
        let v = self.vertices[i];
        Vector3::new(v[0] as f64, v[1] as f64, v[2] as f64)
    }

    pub fn vertices_f64(&self) -> impl Iterator<Item = Vector3<f64>> + '_ {
        (0..self.vertices.len()).map(|i| self.vertex(i))
    }

    /// Axis-aligned box with outward-facing triangles.
    pub fn axis_box(id: impl Into<String>, lo: Vector3<f64>, hi: Vector3<f64>) -> Self {
        let vertices = (0..8)
            .map(|i| {
                let pick = |b: usize| (if i >> b & 1 == 1 { hi[b] } else { lo[b] }) as f32;
                [pick(0), pick(1), pick(2)]
            })
            .collect();
        // corner index = x + 2y + 4z
        let quads = [[0, 2, 3, 1], [4, 5, 7, 6], [0, 1, 5, 4], [2, 6, 7, 3], [0, 4, 6, 2], [1, 3, 7, 5]];
        let triangles = quads.iter().flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]]).collect();
        Self { id: id.into(), vertices, triangles }
    }

    /// Applies `f` to every vertex, keeping topology.
    pub fn map_vertices(&self, mut f: impl FnMut(Vector3<f64>) -> Vector3<f64>) -> Self {
        let vertices = self
            .vertices_f64()
            .map(|v| {
                let w = f(v);
                [w.x as f32, w.y as f32, w.z as f32]
            })
            .collect();
        Self { id: self.id.clone(), vertices, triangles: self.triangles.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingSphere {
    pub center: Vector3<f64>,
    pub radius: f64,
}

impl BoundingSphere {
    pub const UNIT: BoundingSphere = BoundingSphere { center: Vector3::new(0.0, 0.0, 0.0), radius: 1.0 };

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        (p - self.center).norm() <= self.radius * (1.0 + 1e-6)
    }
}

// ---------------------------------------------------------------------------
// OBJ

/// Parses ASCII OBJ text. Polygon faces are fan-triangulated from their
/// first corner; everything except `v` and `f` records is ignored.
pub fn parse_obj(text: &[u8], id: &str) -> MeshResult<TriangleMesh> {
    let text = String::from_utf8_lossy(text);
    let mut vertices: Vec<[f32; 3]> = Vec::new();
    let mut triangles = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        let mut fields = content.split_whitespace();
        match fields.next() {
            Some("v") => {
                let coords: Vec<&str> = fields.collect();
                if coords.len() < 3 {
                    return Err(malformed(line, "vertex needs 3 coordinates"));
                }
                let mut v = [0f32; 3];
                for (slot, s) in v.iter_mut().zip(&coords) {
                    *slot = s
                        .parse::<f32>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| malformed(line, &format!("bad coordinate {s:?}")))?;
                }
                vertices.push(v);
            }
            Some("f") => {
                let mut corners = Vec::new();
                for corner in fields {
                    let idx_str = corner.split('/').next().unwrap_or("");
                    let idx: i64 = idx_str
                        .parse()
                        .map_err(|_| malformed(line, &format!("bad face index {corner:?}")))?;
                    let count = vertices.len();
                    let resolved = match idx {
                        i if i > 0 => i - 1,
                        i if i < 0 => count as i64 + i,
                        _ => return Err(malformed(line, "face index 0 is invalid")),
                    };
                    if resolved < 0 || resolved as usize >= count {
                        return Err(MeshError::IndexOutOfRange { line, index: idx, count });
                    }
                    corners.push(resolved as u32);
                }
                if corners.len() < 3 {
                    return Err(malformed(line, "face needs at least 3 corners"));
                }
                for i in 1..corners.len() - 1 {
                    let tri = [corners[0], corners[i], corners[i + 1]];
                    // repeated corners produce zero-area fan pieces
                    if tri[0] != tri[1] && tri[1] != tri[2] && tri[0] != tri[2] {
                        triangles.push(tri);
                    }
                }
            }
            _ => {}
        }
    }

    if triangles.is_empty() || vertices.len() < 3 {
        return Err(MeshError::EmptyMesh);
    }
    TriangleMesh::new(id, vertices, triangles)
}

fn malformed(line: usize, message: &str) -> MeshError {
    MeshError::MalformedRecord { line, message: message.to_string() }
}

/// Canonical OBJ text: 9 significant digits per coordinate, 1-based faces.
pub fn write_obj(mesh: &TriangleMesh) -> String {
    let mut out = String::with_capacity(mesh.vertices.len() * 48 + mesh.triangles.len() * 24);
    let _ = writeln!(out, "# {}", mesh.id);
    for v in &mesh.vertices {
        let _ = writeln!(out, "v {:.8e} {:.8e} {:.8e}", v[0], v[1], v[2]);
    }
    for t in &mesh.triangles {
        let _ = writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    out
}

// ---------------------------------------------------------------------------
// STL

/// Parses binary or ASCII STL, merging vertices whose coordinates are
/// bit-identical.
pub fn parse_stl(bytes: &[u8], id: &str) -> MeshResult<TriangleMesh> {
    if looks_ascii_stl(bytes) {
        return parse_ascii_stl(bytes, id);
    }
    if bytes.len() < 84 {
        return Err(MeshError::TruncatedFile { expected: 84, actual: bytes.len() });
    }
    let declared = u32::from_le_bytes([bytes[80], bytes[81], bytes[82], bytes[83]]) as usize;
    let expected = 84 + declared * 50;
    if bytes.len() < expected {
        return Err(MeshError::TruncatedFile { expected, actual: bytes.len() });
    }
    if bytes.len() > expected {
        let found = (bytes.len() - 84) / 50;
        return Err(MeshError::CountMismatch { declared, found });
    }

    let mut dedup = VertexDedup::default();
    let mut triangles = Vec::with_capacity(declared);
    for t in 0..declared {
        let base = 84 + t * 50 + 12;
        let mut tri = [0u32; 3];
        for (c, slot) in tri.iter_mut().enumerate() {
            let off = base + c * 12;
            let mut v = [0f32; 3];
            for (a, coord) in v.iter_mut().enumerate() {
                let o = off + a * 4;
                *coord = f32::from_le_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]]);
            }
            *slot = dedup.insert(v);
        }
        triangles.push(tri);
    }
    finish_stl(id, dedup.vertices, triangles, declared)
}

fn looks_ascii_stl(bytes: &[u8]) -> bool {
    let head = &bytes[..bytes.len().min(512)];
    let trimmed = String::from_utf8_lossy(head);
    let trimmed = trimmed.trim_start();
    if !trimmed.starts_with("solid") {
        return false;
    }
    // binary files may also start with "solid"; trust the size formula first
    if bytes.len() >= 84 {
        let declared = u32::from_le_bytes([bytes[80], bytes[81], bytes[82], bytes[83]]) as usize;
        if bytes.len() == 84 + declared * 50 {
            return false;
        }
    }
    true
}

fn parse_ascii_stl(bytes: &[u8], id: &str) -> MeshResult<TriangleMesh> {
    let text = String::from_utf8_lossy(bytes);
    let mut dedup = VertexDedup::default();
    let mut triangles = Vec::new();
    let mut facets = 0usize;
    let mut corners: Vec<u32> = Vec::with_capacity(3);
    let mut in_facet = false;

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let mut fields = raw.split_whitespace();
        match fields.next() {
            Some("facet") => {
                in_facet = true;
                facets += 1;
                corners.clear();
            }
            Some("vertex") => {
                if !in_facet {
                    return Err(malformed(line, "vertex outside facet"));
                }
                let coords: Vec<&str> = fields.collect();
                if coords.len() != 3 {
                    return Err(malformed(line, "vertex needs 3 coordinates"));
                }
                let mut v = [0f32; 3];
                for (slot, s) in v.iter_mut().zip(&coords) {
                    *slot = s.parse().map_err(|_| malformed(line, &format!("bad coordinate {s:?}")))?;
                }
                corners.push(dedup.insert(v));
            }
            Some("endfacet") => {
                if corners.len() != 3 {
                    return Err(malformed(line, "facet must have exactly 3 vertices"));
                }
                triangles.push([corners[0], corners[1], corners[2]]);
                in_facet = false;
            }
            _ => {}
        }
    }
    if in_facet {
        return Err(MeshError::TruncatedFile { expected: facets, actual: triangles.len() });
    }
    finish_stl(id, dedup.vertices, triangles, facets)
}

fn finish_stl(
    id: &str,
    vertices: Vec<[f32; 3]>,
    triangles: Vec<[u32; 3]>,
    declared: usize,
) -> MeshResult<TriangleMesh> {
    if triangles.len() != declared {
        return Err(MeshError::CountMismatch { declared, found: triangles.len() });
    }
    if triangles.is_empty() || vertices.len() < 3 {
        return Err(MeshError::EmptyMesh);
    }
    TriangleMesh::new(id, vertices, triangles)
}

#[derive(Default)]
struct VertexDedup {
    index: HashMap<[u32; 3], u32>,
    vertices: Vec<[f32; 3]>,
}

impl VertexDedup {
    fn insert(&mut self, v: [f32; 3]) -> u32 {
        let key = [v[0].to_bits(), v[1].to_bits(), v[2].to_bits()];
        *self.index.entry(key).or_insert_with(|| {
            self.vertices.push(v);
            (self.vertices.len() - 1) as u32
        })
    }
}

/// Binary STL encoding of a mesh (normals zeroed).
pub fn write_binary_stl(mesh: &TriangleMesh) -> Vec<u8> {
    let mut out = vec![0u8; 80];
    out.extend_from_slice(&(mesh.triangles.len() as u32).to_le_bytes());
    for tri in &mesh.triangles {
        out.extend_from_slice(&[0u8; 12]);
        for &i in tri {
            for c in mesh.vertices[i as usize] {
                out.extend_from_slice(&c.to_le_bytes());
            }
        }
        out.extend_from_slice(&[0u8; 2]);
    }
    out
}

// ---------------------------------------------------------------------------
// Normalization

/// Ritter's bounding sphere followed by one tightening pass that shrinks the
/// radius to the farthest vertex from the chosen center.
pub fn bounding_sphere(mesh: &TriangleMesh) -> BoundingSphere {
    let pts: Vec<Vector3<f64>> = mesh.vertices_f64().collect();
    let farthest = |from: &Vector3<f64>| {
        let mut best = 0;
        let mut best_d = -1.0;
        for (i, p) in pts.iter().enumerate() {
            let d = (p - from).norm_squared();
            if d > best_d {
                best_d = d;
                best = i;
            }
        }
        best
    };
    let y = farthest(&pts[0]);
    let z = farthest(&pts[y]);
    let mut center = (pts[y] + pts[z]) * 0.5;
    let mut radius = (pts[y] - pts[z]).norm() * 0.5;
    for p in &pts {
        let d = (p - center).norm();
        if d > radius {
            let grown = (radius + d) * 0.5;
            center += (p - center) * ((d - grown) / d);
            radius = grown;
        }
    }
    radius = pts.iter().map(|p| (p - center).norm()).fold(0.0, f64::max);
    BoundingSphere { center, radius }
}

/// Translates and scales the mesh so its bounding sphere becomes the unit
/// sphere at the origin. Returns the sphere of the input mesh.
pub fn normalize(mesh: &TriangleMesh) -> MeshResult<(TriangleMesh, BoundingSphere)> {
    mesh.validate()?;
    let sphere = bounding_sphere(mesh);
    if !(sphere.radius > 0.0) || sphere.radius < 1e-12 * (1.0 + sphere.center.norm()) {
        return Err(MeshError::DegenerateMesh);
    }
    let inv = 1.0 / sphere.radius;
    let normalized = mesh.map_vertices(|v| (v - sphere.center) * inv);
    Ok((normalized, sphere))
}

#[cfg(test)]
mod tests {
    use super::*;

    const CUBE_OBJ: &str = "\
# unit cube
v 0 0 0
v 1 0 0
v 1 1 0
v 0 1 0
v 0 0 1
v 1 0 1
v 1 1 1
v 0 1 1
vn 0 0 1
f 1 4 3 2
f 5 6 7 8
f 1 2 6 5
f 2 3 7 6
f 3 4 8 7
f 4 1 5 8
";

    pub(crate) fn cube_mesh(lo: f64, hi: f64) -> TriangleMesh {
        parse_obj(CUBE_OBJ.as_bytes(), "cube")
            .unwrap()
            .map_vertices(|v| v * (hi - lo) + Vector3::repeat(lo))
    }

    #[test]
    fn cube_obj_fan_triangulates() {
        let m = parse_obj(CUBE_OBJ.as_bytes(), "cube").unwrap();
        assert_eq!(m.vertices.len(), 8);
        assert_eq!(m.triangles.len(), 12);
        assert_eq!(m.triangles[0], [0, 3, 2]);
        assert_eq!(m.triangles[1], [0, 2, 1]);
    }

    #[test]
    fn single_triangle() {
        let m = parse_obj(b"v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n", "t").unwrap();
        assert_eq!(m.vertices.len(), 3);
        assert_eq!(m.triangles, vec![[0, 1, 2]]);
    }

    #[test]
    fn face_index_out_of_range() {
        let text = CUBE_OBJ.replace("f 5 6 7 8", "f 5 6 7 9");
        let err = parse_obj(text.as_bytes(), "c").unwrap_err();
        assert!(matches!(err, MeshError::IndexOutOfRange { index: 9, count: 8, .. }), "{err:?}");
    }

    #[test]
    fn malformed_vertex_reports_line() {
        let err = parse_obj(b"v 0 0 0\nv 1 zero 0\n", "m").unwrap_err();
        assert!(matches!(err, MeshError::MalformedRecord { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn empty_mesh() {
        assert_eq!(parse_obj(b"v 0 0 0\n# nothing\n", "e").unwrap_err(), MeshError::EmptyMesh);
    }

    #[test]
    fn slashed_and_negative_indices() {
        let m = parse_obj(b"v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3/1/1 -2/2/2 -1//3\n", "s").unwrap();
        assert_eq!(m.triangles, vec![[0, 1, 2]]);
    }

    fn binary_cube_stl() -> Vec<u8> {
        // one-off generator: 12 facets of the cube [0,1]^3 written record by record
        let m = parse_obj(CUBE_OBJ.as_bytes(), "cube").unwrap();
        let mut out = vec![b'x'; 80];
        out.extend_from_slice(&12u32.to_le_bytes());
        for t in &m.triangles {
            out.extend_from_slice(&[0; 12]);
            for &i in t {
                for c in m.vertices[i as usize] {
                    out.extend_from_slice(&c.to_le_bytes());
                }
            }
            out.extend_from_slice(&[0; 2]);
        }
        out
    }

    #[test]
    fn binary_stl_cube_dedups_vertices() {
        let bytes = binary_cube_stl();
        assert_eq!(bytes.len(), 84 + 12 * 50);
        let m = parse_stl(&bytes, "cube").unwrap();
        assert_eq!(m.vertices.len(), 8);
        assert_eq!(m.triangles.len(), 12);
    }

    #[test]
    fn binary_stl_truncated() {
        let mut bytes = binary_cube_stl()[..84 + 3 * 50].to_vec();
        bytes[80..84].copy_from_slice(&5u32.to_le_bytes());
        assert!(matches!(parse_stl(&bytes, "t").unwrap_err(), MeshError::TruncatedFile { .. }));
    }

    #[test]
    fn binary_stl_extra_records() {
        let mut bytes = binary_cube_stl();
        bytes[80..84].copy_from_slice(&10u32.to_le_bytes());
        assert_eq!(
            parse_stl(&bytes, "t").unwrap_err(),
            MeshError::CountMismatch { declared: 10, found: 12 }
        );
    }

    #[test]
    fn ascii_stl_single_facet() {
        let text = "solid t\n facet normal 0 0 1\n  outer loop\n   vertex 0 0 0\n   vertex 1 0 0\n   vertex 0 1 0\n  endloop\n endfacet\nendsolid t\n";
        let m = parse_stl(text.as_bytes(), "t").unwrap();
        assert_eq!(m.vertices.len(), 3);
        assert_eq!(m.triangles, vec![[0, 1, 2]]);
    }

    #[test]
    fn binary_writer_reparses() {
        let m = parse_obj(CUBE_OBJ.as_bytes(), "cube").unwrap();
        let back = parse_stl(&write_binary_stl(&m), "cube").unwrap();
        assert_eq!(back.triangles.len(), 12);
        assert_eq!(back.vertices.len(), 8);
    }

    #[test]
    fn normalize_cube_to_unit_sphere() {
        let m = cube_mesh(0.0, 2.0);
        let (n, sphere) = normalize(&m).unwrap();
        assert!((sphere.center - Vector3::new(1.0, 1.0, 1.0)).norm() < 1e-12);
        assert!((sphere.radius - 3f64.sqrt()).abs() < 1e-12);
        let max = n.vertices_f64().map(|v| v.norm()).fold(0.0, f64::max);
        assert!((max - 1.0).abs() < 1e-6, "{max}");
        let c: Vector3<f64> = n.vertices_f64().sum::<Vector3<f64>>() / 8.0;
        assert!(c.norm() < 1e-6);
    }

    #[test]
    fn normalize_is_idempotent_on_cube() {
        let (once, _) = normalize(&cube_mesh(0.0, 2.0)).unwrap();
        let (twice, _) = normalize(&once).unwrap();
        for (a, b) in once.vertices.iter().zip(&twice.vertices) {
            for i in 0..3 {
                assert!((a[i] - b[i]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn degenerate_single_point() {
        let m = TriangleMesh {
            id: "p".into(),
            vertices: vec![[1.0, 1.0, 1.0]; 3],
            triangles: vec![[0, 1, 2]],
        };
        assert_eq!(normalize(&m).unwrap_err(), MeshError::DegenerateMesh);
    }
}
