//! Deterministic software rasterizer producing grayscale snapshots.
//!
//! Perspective projection, a per-pixel depth buffer (nearest wins, ties go
//! to the lower triangle index), flat Lambert shading from a headlight at
//! the camera, and top-left fill so shared edges are drawn exactly once.

use std::io::Write as _;

use thiserror::Error;

use crate::autodiff::Tensor;
use crate::mesh::TriangleMesh;
use crate::view::{admissibility_check, Admissibility, CameraIntrinsics, CameraPose, Projected, Projector};

pub const AMBIENT: f64 = 0.15;
pub const DIFFUSE: f64 = 0.85;

#[derive(Debug, Error, PartialEq)]
pub enum RenderError {
    #[error("pose is not admissible (visible_all={}, coverage={:.3})", .0.visible_all, .0.bbox_coverage)]
    InvalidPose(Admissibility),
    #[error("bad image data: {0}")]
    BadImage(String),
}

/// One rendered view. Intensities are row-major in `[0, 1]`, background 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f32>,
    pub pose: CameraPose,
}

impl Snapshot {
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.pixels[y * self.width + x]
    }

    /// Fraction of non-background pixels.
    pub fn silhouette_coverage(&self) -> f64 {
        self.pixels.iter().filter(|&&v| v > 0.0).count() as f64 / self.pixels.len() as f64
    }

    /// Binary PGM (`P5`, maxval 255) with `round(v * 255)` quantisation.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.pixels.len() + 20);
        let _ = write!(out, "P5\n{} {}\n255\n", self.width, self.height);
        out.extend(self.pixels.iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
        out
    }

    pub fn from_pgm(bytes: &[u8], pose: CameraPose) -> Result<Self, RenderError> {
        let bad = |m: &str| RenderError::BadImage(m.to_string());
        // header: magic, width, height, maxval separated by whitespace
        let mut fields = Vec::with_capacity(4);
        let mut pos = 0;
        while fields.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(bad("truncated PGM header"));
            }
            fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("non-ASCII header"))?);
        }
        if fields[0] != "P5" {
            return Err(bad("not a binary PGM"));
        }
        let parse = |s: &str| s.parse::<usize>().map_err(|_| bad("bad PGM dimension"));
        let (width, height, maxval) = (parse(fields[1])?, parse(fields[2])?, parse(fields[3])?);
        if maxval != 255 {
            return Err(bad("only maxval 255 is supported"));
        }
        let data = &bytes[pos + 1..];
        if data.len() != width * height {
            return Err(bad("PGM payload size mismatch"));
        }
        let pixels = data.iter().map(|&b| b as f32 / 255.0).collect();
        Ok(Self { width, height, pixels, pose })
    }
}

/// Renders the mesh as seen from `pose`. Triangles with a vertex at or
/// behind the near plane are skipped.
pub fn render(mesh: &TriangleMesh, pose: &CameraPose, intrinsics: &CameraIntrinsics) -> Snapshot {
    let (w, h) = (intrinsics.width, intrinsics.height);
    let proj = Projector::new(pose, intrinsics);
    let screen: Vec<Projected> = mesh.vertices_f64().map(|v| proj.project(&v)).collect();

    let mut pixels = vec![0f32; w * h];
    let mut inv_depth = vec![0f64; w * h];

    for tri in &mesh.triangles {
        let idx = tri.map(|i| i as usize);
        let mut p = idx.map(|i| screen[i]);
        if p.iter().any(|q| !(q.depth > intrinsics.near)) {
            continue;
        }
        let mut area = edge(&p[0], &p[1], p[2].x, p[2].y);
        if area == 0.0 || !area.is_finite() {
            continue;
        }
        if area < 0.0 {
            p.swap(1, 2);
            area = -area;
        }
        let shade = face_shade(mesh, &idx, pose) as f32;

        let min_x = p.iter().map(|q| q.x).fold(f64::INFINITY, f64::min);
        let max_x = p.iter().map(|q| q.x).fold(f64::NEG_INFINITY, f64::max);
        let min_y = p.iter().map(|q| q.y).fold(f64::INFINITY, f64::min);
        let max_y = p.iter().map(|q| q.y).fold(f64::NEG_INFINITY, f64::max);
        let x0 = ((min_x - 0.5).ceil().max(0.0)) as usize;
        let y0 = ((min_y - 0.5).ceil().max(0.0)) as usize;
        let x1 = (max_x - 0.5).floor().min(w as f64 - 1.0);
        let y1 = (max_y - 0.5).floor().min(h as f64 - 1.0);
        if x1 < 0.0 || y1 < 0.0 {
            continue;
        }
        let (x1, y1) = (x1 as usize, y1 as usize);

        let tl = [top_left(&p[1], &p[2]), top_left(&p[2], &p[0]), top_left(&p[0], &p[1])];
        for py in y0..=y1 {
            let cy = py as f64 + 0.5;
            for px in x0..=x1 {
                let cx = px as f64 + 0.5;
                let e = [edge(&p[1], &p[2], cx, cy), edge(&p[2], &p[0], cx, cy), edge(&p[0], &p[1], cx, cy)];
                if !e.iter().zip(&tl).all(|(&v, &t)| v > 0.0 || (v == 0.0 && t)) {
                    continue;
                }
                let z = (e[0] / p[0].depth + e[1] / p[1].depth + e[2] / p[2].depth) / area;
                let slot = py * w + px;
                if z > inv_depth[slot] {
                    inv_depth[slot] = z;
                    pixels[slot] = shade;
                }
            }
        }
    }

    Snapshot { width: w, height: h, pixels, pose: *pose }
}

/// Like [`render`], but refuses poses that fail the admissibility check.
pub fn render_strict(
    mesh: &TriangleMesh,
    pose: &CameraPose,
    intrinsics: &CameraIntrinsics,
) -> Result<Snapshot, RenderError> {
    let report = admissibility_check(mesh, pose, intrinsics);
    if !report.admissible() {
        return Err(RenderError::InvalidPose(report));
    }
    Ok(render(mesh, pose, intrinsics))
}

/// Signed edge function, evaluated from a canonical endpoint order so that
/// `edge(a, b, p) == -edge(b, a, p)` holds exactly.
fn edge(a: &Projected, b: &Projected, x: f64, y: f64) -> f64 {
    let raw = |a: &Projected, b: &Projected| (b.x - a.x) * (y - a.y) - (b.y - a.y) * (x - a.x);
    if (a.x, a.y) <= (b.x, b.y) {
        raw(a, b)
    } else {
        -raw(b, a)
    }
}

fn top_left(a: &Projected, b: &Projected) -> bool {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    dy < 0.0 || (dy == 0.0 && dx > 0.0)
}

/// `0.15 + 0.85 * max(0, n . v)` with the face normal flipped toward the
/// camera and `v` pointing from the face centroid to the camera.
fn face_shade(mesh: &TriangleMesh, idx: &[usize; 3], pose: &CameraPose) -> f64 {
    let [a, b, c] = idx.map(|i| mesh.vertex(i));
    let n = (b - a).cross(&(c - a));
    let to_cam = pose.position - (a + b + c) / 3.0;
    let (nn, vn) = (n.norm(), to_cam.norm());
    if nn == 0.0 || vn == 0.0 {
        return AMBIENT;
    }
    let cos = (n.dot(&to_cam) / (nn * vn)).abs().min(1.0);
    (AMBIENT + DIFFUSE * cos).clamp(0.0, 1.0)
}

/// Network input layout `[1, H, W]`; values are copied unchanged.
pub fn snapshot_to_tensor(s: &Snapshot) -> Tensor<f32> {
    Tensor::new(&[1, s.height, s.width], s.pixels.clone()).expect("snapshot dimensions are non-zero")
}

pub fn tensor_to_snapshot(t: &Tensor<f32>, pose: CameraPose) -> Result<Snapshot, RenderError> {
    match t.shape() {
        &[1, h, w] => Ok(Snapshot { width: w, height: h, pixels: t.data().to_vec(), pose }),
        other => Err(RenderError::BadImage(format!("expected [1, H, W], got {other:?}"))),
    }
}
