//! Procedural voxel parts with rule-based labels.
//!
//! Rule table, in seconds:
//!
//! | step       | rule                                                        |
//! |------------|-------------------------------------------------------------|
//! | welding    | 60 per welded joint                                         |
//! | cutting    | 2 per unit of blank perimeter, summed, rounded to 5 s       |
//! | bending    | 5 per bend                                                  |
//! | screwing   | 12 per fastener                                             |
//! | drilling   | 15 per through-hole                                         |
//! | assembling | 30 per assembly unit beyond the first                       |
//!
//! Parts joined by welds form a single assembly unit; fasteners join units.
//! One voxel is one perimeter unit.

use std::collections::{BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::TimeVector;
use crate::mesh::{normalize, BoundingSphere, TriangleMesh};
use crate::view::ViewSampler;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bend {
    Flat,
    L,
    U,
    Z,
}

impl Bend {
    pub fn count(self) -> u32 {
        match self {
            Bend::Flat => 0,
            Bend::L => 1,
            Bend::U | Bend::Z => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PartShape {
    /// Sheet blank `length x width`, one voxel thick, folded along its length.
    Plate { length: u32, width: u32, bend: Bend, holes: u32 },
    Block { w: u32, d: u32, h: u32 },
    /// Right-triangle cross-section (`base x height`) extruded by `length`.
    Prism { base: u32, height: u32, length: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Part {
    pub shape: PartShape,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JointKind {
    Weld,
    Fasten,
}

/// `count` welds or fasteners between parts `a` and `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Joint {
    pub a: usize,
    pub b: usize,
    pub kind: JointKind,
    pub count: u32,
}

/// A construction recipe. Part `i > 0` is attached to part `i - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Recipe {
    pub parts: Vec<Part>,
    pub joints: Vec<Joint>,
}

type Cell = [i32; 3];

impl Part {
    /// Outline length of the blank the part is cut from.
    pub fn perimeter(&self) -> f64 {
        match self.shape {
            PartShape::Plate { length, width, .. } => 2.0 * (length + width) as f64,
            PartShape::Block { w, d, .. } => 2.0 * (w + d) as f64,
            PartShape::Prism { base, height, .. } => {
                let (b, h) = (base as f64, height as f64);
                b + h + b.hypot(h)
            }
        }
    }

    pub fn bends(&self) -> u32 {
        match self.shape {
            PartShape::Plate { bend, .. } => bend.count(),
            _ => 0,
        }
    }

    pub fn holes(&self) -> u32 {
        match self.shape {
            PartShape::Plate { holes, .. } => holes,
            _ => 0,
        }
    }

    fn voxels(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        match self.shape {
            PartShape::Block { w, d, h } => {
                for x in 0..w as i32 {
                    for y in 0..d as i32 {
                        for z in 0..h as i32 {
                            out.push([x, y, z]);
                        }
                    }
                }
            }
            PartShape::Prism { base, height, length } => {
                for x in 0..base {
                    let h = (height as f64 * (base - x) as f64 / base as f64).ceil().max(1.0) as i32;
                    for y in 0..length as i32 {
                        for z in 0..h {
                            out.push([x as i32, y, z]);
                        }
                    }
                }
            }
            PartShape::Plate { length, width, bend, holes } => {
                let path = fold_path(length as i32, bend);
                let holes: BTreeSet<(i32, i32)> = hole_sites(length, width, bend).into_iter().take(holes as usize).collect();
                for (u, &(x, z)) in path.iter().enumerate() {
                    for v in 0..width as i32 {
                        if !holes.contains(&(u as i32, v)) {
                            out.push([x, v, z]);
                        }
                    }
                }
            }
        }
        out
    }
}

/// Maps blank position `u` to voxel `(x, z)` after folding.
fn fold_path(len: i32, bend: Bend) -> Vec<(i32, i32)> {
    (0..len)
        .map(|u| match bend {
            Bend::Flat => (u, 0),
            Bend::L => {
                let a = len / 2;
                if u < a { (u, 0) } else { (a - 1, u - a + 1) }
            }
            Bend::U => {
                let side = (len / 4).max(1);
                let base = len - 2 * side;
                if u < side {
                    (0, side - u)
                } else if u < side + base {
                    (u - side, 0)
                } else {
                    (base - 1, u - side - base + 1)
                }
            }
            Bend::Z => {
                let a = len / 3;
                let b = len / 3;
                if u < a {
                    (u, 0)
                } else if u < a + b {
                    (a - 1, u - a + 1)
                } else {
                    (a - 1 + u - a - b + 1, b)
                }
            }
        })
        .collect()
}

fn bend_positions(len: i32, bend: Bend) -> Vec<i32> {
    match bend {
        Bend::Flat => vec![],
        Bend::L => vec![len / 2 - 1, len / 2],
        Bend::U => {
            let side = (len / 4).max(1);
            vec![side - 1, side, len - side - 1, len - side]
        }
        Bend::Z => vec![len / 3 - 1, len / 3, 2 * (len / 3) - 1, 2 * (len / 3)],
    }
}

/// Interior blank positions that can take a hole: away from edges, bends and
/// each other. Spread evenly so the first few are far apart.
fn hole_sites(length: u32, width: u32, bend: Bend) -> Vec<(i32, i32)> {
    let bends = bend_positions(length as i32, bend);
    let mut sites = Vec::new();
    for u in (1..length as i32 - 1).step_by(2) {
        if bends.iter().any(|&b| (u - b).abs() <= 1) {
            continue;
        }
        for v in (1..width as i32 - 1).step_by(2) {
            sites.push((u, v));
        }
    }
    spread(sites)
}

/// Reorders so that any prefix is roughly evenly spaced over the input.
fn spread<T: Copy>(items: Vec<T>) -> Vec<T> {
    let n = items.len();
    let mut order: Vec<usize> = (0..n).collect();
    // bit-reversal-like ordering by fractional position
    order.sort_by_key(|&i| {
        let mut key = 0u32;
        let (mut lo, mut hi, mut depth) = (0usize, n, 0);
        while hi - lo > 1 && depth < 16 {
            let mid = (lo + hi) / 2;
            key <<= 1;
            if i >= mid {
                lo = mid;
            } else {
                key |= 1;
                hi = mid;
            }
            depth += 1;
        }
        key << (16 - depth)
    });
    order.into_iter().map(|i| items[i]).collect()
}

impl Recipe {
    /// Groups of parts joined by welds.
    pub fn assembly_units(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.parts.len()).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        for j in self.joints.iter().filter(|j| j.kind == JointKind::Weld) {
            let (a, b) = (find(&mut parent, j.a), find(&mut parent, j.b));
            parent[a.max(b)] = a.min(b);
        }
        (0..self.parts.len()).filter(|&i| find(&mut parent, i) == i).count()
    }

    /// Applies the rule table.
    pub fn labels(&self) -> TimeVector {
        let count = |kind| self.joints.iter().filter(|j| j.kind == kind).map(|j| j.count).sum::<u32>() as f64;
        let perimeter: f64 = self.parts.iter().map(Part::perimeter).sum();
        let bends: u32 = self.parts.iter().map(Part::bends).sum();
        let holes: u32 = self.parts.iter().map(Part::holes).sum();
        let units = self.assembly_units().max(1);
        TimeVector::new(vec![
            60.0 * count(JointKind::Weld),
            5.0 * (2.0 * perimeter / 5.0).round(),
            5.0 * bends as f64,
            12.0 * count(JointKind::Fasten),
            15.0 * holes as f64,
            30.0 * (units - 1) as f64,
        ])
        .expect("rule outputs are non-negative")
    }

    /// Voxel geometry: parts laid out in a chain, weld beads around each
    /// welded seam and fastener heads on the attached part's far face.
    pub fn mesh(&self, id: &str) -> TriangleMesh {
        let mut occupied = BTreeSet::new();
        let mut boxes: Vec<(Cell, Cell)> = Vec::new();
        let mut placed: Vec<Vec<Cell>> = Vec::new();
        for (i, part) in self.parts.iter().enumerate() {
            let local = part.voxels();
            let (lo, hi) = bounds(&local);
            let offset = if i == 0 {
                [0, 0, 0]
            } else {
                let union = boxes.iter().fold(boxes[0], |(a, b), (c, d)| (min3(a, *c), max3(b, *d)));
                let extent = |k: usize| union.1[k] - union.0[k];
                let axis = [2, 0, 1].into_iter().min_by_key(|&k| extent(k)).unwrap();
                let (plo, phi) = boxes[i - 1];
                let mut off = [0; 3];
                for k in 0..3 {
                    off[k] = if k == axis {
                        phi[k] + 1 - lo[k]
                    } else {
                        (plo[k] + phi[k]) / 2 - (lo[k] + hi[k]) / 2
                    };
                }
                off
            };
            let cells: Vec<Cell> = local.iter().map(|c| add3(*c, offset)).collect();
            boxes.push((add3(lo, offset), add3(hi, offset)));
            occupied.extend(cells.iter().copied());
            placed.push(cells);
        }

        for j in &self.joints {
            let (_, ahi) = boxes[j.a];
            let (blo, bhi) = boxes[j.b];
            let axis = (0..3).find(|&k| blo[k] == ahi[k] + 1).unwrap_or(2);
            let (p, q) = ((axis + 1) % 3, (axis + 2) % 3);
            match j.kind {
                JointKind::Weld => {
                    // ring just outside b's footprint, in b's first layer
                    let mut ring = Vec::new();
                    for s in blo[p]..=bhi[p] {
                        ring.push((s, blo[q] - 1));
                        ring.push((s, bhi[q] + 1));
                    }
                    for t in blo[q]..=bhi[q] {
                        ring.push((blo[p] - 1, t));
                        ring.push((bhi[p] + 1, t));
                    }
                    for (s, t) in spread(ring).into_iter().take(j.count as usize) {
                        let mut c = [0; 3];
                        c[axis] = blo[axis];
                        c[p] = s;
                        c[q] = t;
                        occupied.insert(c);
                    }
                }
                JointKind::Fasten => {
                    let mut heads = Vec::new();
                    for s in (blo[p] + 1..bhi[p]).step_by(2) {
                        for t in (blo[q] + 1..bhi[q]).step_by(2) {
                            let top = placed[j.b].iter().filter(|c| c[p] == s && c[q] == t).map(|c| c[axis]).max();
                            if let Some(top) = top {
                                heads.push((s, t, top + 1));
                            }
                        }
                    }
                    for (s, t, h) in spread(heads).into_iter().take(j.count as usize) {
                        let mut c = [0; 3];
                        c[axis] = h;
                        c[p] = s;
                        c[q] = t;
                        occupied.insert(c);
                    }
                }
            }
        }
        voxel_mesh(id, &occupied)
    }

    /// Random recipe. Complexity 1 has at most two parts and at most three
    /// nonzero steps; 2 has two or three parts; 3 has three to five.
    /// Levels outside 1..=3 are clamped.
    pub fn random(rng: &mut impl Rng, complexity: u8) -> Self {
        match complexity.clamp(1, 3) {
            1 => {
                if rng.gen_bool(0.5) {
                    Recipe { parts: vec![random_part(rng, true, true)], joints: vec![] }
                } else if rng.gen_bool(0.5) {
                    let parts = vec![random_part(rng, false, true), random_part(rng, false, true)];
                    Recipe { parts, joints: vec![Joint { a: 0, b: 1, kind: JointKind::Weld, count: rng.gen_range(1..=5) }] }
                } else {
                    let parts = vec![random_part(rng, false, false), random_part(rng, false, false)];
                    let count = rng.gen_range(1..=4);
                    Recipe { parts, joints: vec![Joint { a: 0, b: 1, kind: JointKind::Fasten, count }] }
                }
            }
            level => {
                let n = if level == 2 { rng.gen_range(2..=3) } else { rng.gen_range(3..=5) };
                let parts: Vec<Part> = (0..n).map(|_| random_part(rng, true, true)).collect();
                let joints = (1..n)
                    .map(|b| {
                        if rng.gen_bool(0.5) {
                            Joint { a: b - 1, b, kind: JointKind::Weld, count: rng.gen_range(1..=5) }
                        } else {
                            Joint { a: b - 1, b, kind: JointKind::Fasten, count: rng.gen_range(1..=4) }
                        }
                    })
                    .collect();
                Recipe { parts, joints }
            }
        }
    }
}

fn random_part(rng: &mut impl Rng, allow_holes: bool, allow_bends: bool) -> Part {
    let shape = match rng.gen_range(0..3) {
        0 => {
            let length = rng.gen_range(6..=12);
            let width = rng.gen_range(4..=9);
            let bend = if allow_bends { [Bend::Flat, Bend::L, Bend::U, Bend::Z][rng.gen_range(0..4)] } else { Bend::Flat };
            let max_holes = if allow_holes { (hole_sites(length, width, bend).len() as u32).min(3) } else { 0 };
            PartShape::Plate { length, width, bend, holes: rng.gen_range(0..=max_holes) }
        }
        1 => PartShape::Block { w: rng.gen_range(3..=7), d: rng.gen_range(3..=7), h: rng.gen_range(3..=7) },
        _ => PartShape::Prism { base: rng.gen_range(3..=7), height: rng.gen_range(3..=7), length: rng.gen_range(3..=7) },
    };
    Part { shape }
}

/// Probe budget for the viewability screen.
pub const VIEW_PROBES: usize = 1000;
/// Minimum admissible fraction of random default-shell poses.
pub const MIN_VIEWABLE_FRACTION: f64 = 0.02;

/// Draws recipes until one is comfortably viewable under the default camera
/// shell, then returns its geometry and labels. The mesh id is
/// `"synthetic"`; callers rename it.
pub fn generate_synthetic_item(rng: &mut impl Rng, complexity: u8) -> (TriangleMesh, TimeVector) {
    let sampler = ViewSampler::default();
    let enough = (VIEW_PROBES as f64 * MIN_VIEWABLE_FRACTION).ceil() as usize;
    loop {
        let recipe = Recipe::random(rng, complexity);
        let mesh = recipe.mesh("synthetic");
        let (unit, _) = normalize(&mesh).expect("voxel meshes are non-degenerate");
        let mut probe = ChaCha8Rng::seed_from_u64(rng.gen());
        if sampler.admissible_fraction(&unit, &BoundingSphere::UNIT, &mut probe, VIEW_PROBES, enough) >= MIN_VIEWABLE_FRACTION {
            return (mesh, recipe.labels());
        }
    }
}

fn bounds(cells: &[Cell]) -> (Cell, Cell) {
    cells.iter().fold(([i32::MAX; 3], [i32::MIN; 3]), |(lo, hi), c| (min3(lo, *c), max3(hi, *c)))
}

fn min3(a: Cell, b: Cell) -> Cell {
    [a[0].min(b[0]), a[1].min(b[1]), a[2].min(b[2])]
}

fn max3(a: Cell, b: Cell) -> Cell {
    [a[0].max(b[0]), a[1].max(b[1]), a[2].max(b[2])]
}

fn add3(a: Cell, b: Cell) -> Cell {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

/// Boundary faces of a voxel set, two outward-wound triangles per face.
fn voxel_mesh(id: &str, cells: &BTreeSet<Cell>) -> TriangleMesh {
    let mut index: HashMap<Cell, u32> = HashMap::new();
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut vid = |p: Cell, vertices: &mut Vec<[f32; 3]>| {
        *index.entry(p).or_insert_with(|| {
            vertices.push([p[0] as f32, p[1] as f32, p[2] as f32]);
            (vertices.len() - 1) as u32
        })
    };
    for &c in cells {
        for axis in 0..3 {
            for positive in [false, true] {
                let mut n = c;
                n[axis] += if positive { 1 } else { -1 };
                if cells.contains(&n) {
                    continue;
                }
                let (b, d) = ((axis + 1) % 3, (axis + 2) % 3);
                let mut quad = [(0, 0), (1, 0), (1, 1), (0, 1)];
                if !positive {
                    quad.reverse();
                }
                let ids = quad.map(|(s, t)| {
                    let mut p = c;
                    p[axis] += positive as i32;
                    p[b] += s;
                    p[d] += t;
                    vid(p, &mut vertices)
                });
                triangles.push([ids[0], ids[1], ids[2]]);
                triangles.push([ids[0], ids[2], ids[3]]);
            }
        }
    }
    TriangleMesh { id: id.to_string(), vertices, triangles }
}
