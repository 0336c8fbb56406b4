//! Snapshot pools and scene sampling.

use std::fs;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{DatasetError, TimeVector};
use crate::autodiff::Tensor;
use crate::mesh::{normalize, TriangleMesh};
use crate::raster::{render, snapshot_to_tensor, Snapshot};
use crate::view::{pose_to_feature, CameraIntrinsics, CameraPose, ViewSampler};

/// Pre-rendered admissible views of one item. Pixels are quantised to
/// 8 bits so a pool loaded from disk equals the one that was built.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotPool {
    pub item: String,
    pub seed: u64,
    pub snapshots: Vec<Snapshot>,
}

impl SnapshotPool {
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }
}

/// Inclusive range of views per scene.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViewCount {
    pub min: usize,
    pub max: usize,
}

impl Default for ViewCount {
    fn default() -> Self {
        Self { min: 3, max: 5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneView {
    pub image: Tensor<f32>,
    pub pose: [f32; 6],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub item: String,
    pub views: Vec<SceneView>,
    pub target: Option<TimeVector>,
}

impl Scene {
    pub fn len(&self) -> usize {
        self.views.len()
    }

    pub fn is_empty(&self) -> bool {
        self.views.is_empty()
    }
}

/// Renders one view with pixels quantised to 8 bits, matching what a pool
/// stores on disk.
pub fn render_quantized(mesh: &TriangleMesh, pose: &CameraPose, intrinsics: &CameraIntrinsics) -> Snapshot {
    let mut snap = render(mesh, pose, intrinsics);
    for v in &mut snap.pixels {
        *v = (v.clamp(0.0, 1.0) * 255.0).round() / 255.0;
    }
    snap
}

/// Renders `size` snapshots of the (normalised) mesh. Snapshot `i` depends
/// only on `(seed, item, i)`.
pub fn build_pool(
    mesh: &TriangleMesh,
    item: &str,
    size: usize,
    sampler: &ViewSampler,
    seed: u64,
) -> Result<SnapshotPool, DatasetError> {
    let (mesh, _) = normalize(mesh)?;
    let snapshots = (0..size as u64)
        .map(|i| {
            let pose = sampler.sample_indexed(&mesh, seed, item, i)?;
            Ok(render_quantized(&mesh, &pose, &sampler.intrinsics))
        })
        .collect::<Result<Vec<_>, DatasetError>>()?;
    Ok(SnapshotPool { item: item.to_string(), seed, snapshots })
}

/// Builds pools for many items in parallel on up to `threads` workers
/// (all cores when `None`). Results are in input order; the first failing
/// item's error is returned, tagged with its id.
pub fn build_pools(
    items: &[(String, TriangleMesh)],
    size: usize,
    sampler: &ViewSampler,
    seed: u64,
    threads: Option<usize>,
) -> Result<Vec<SnapshotPool>, DatasetError> {
    let work = || {
        items
            .par_iter()
            .map(|(id, mesh)| build_pool(mesh, id, size, sampler, seed).map_err(|e| e.for_item(id)))
            .collect::<Vec<_>>()
    };
    let results = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| DatasetError::InvalidRange(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };
    results.into_iter().collect()
}

#[derive(Serialize, Deserialize)]
struct PoolMeta {
    item: String,
    seed: u64,
    size: usize,
}

/// Writes `<root>/<item>/<i>.pgm`, `poses.json` (array of six-vectors) and
/// `pool.json` (item, seed, size).
pub fn save_pool(pool: &SnapshotPool, root: &Path) -> Result<(), DatasetError> {
    let dir = root.join(&pool.item);
    fs::create_dir_all(&dir).map_err(|e| DatasetError::io(&dir, e))?;
    for (i, s) in pool.snapshots.iter().enumerate() {
        let path = dir.join(format!("{i}.pgm"));
        fs::write(&path, s.to_pgm()).map_err(|e| DatasetError::io(&path, e))?;
    }
    let poses: Vec<[f64; 6]> = pool.snapshots.iter().map(|s| s.pose.to_array()).collect();
    let write_json = |name: &str, text: String| {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| DatasetError::io(&path, e))
    };
    write_json("poses.json", serde_json::to_string(&poses).expect("plain arrays serialise"))?;
    let meta = PoolMeta { item: pool.item.clone(), seed: pool.seed, size: pool.len() };
    write_json("pool.json", serde_json::to_string(&meta).expect("plain struct serialises"))
}

pub fn load_pool(root: &Path, item: &str) -> Result<SnapshotPool, DatasetError> {
    let dir = root.join(item);
    if !dir.is_dir() {
        return Err(DatasetError::PoolMissing(item.to_string()));
    }
    let read = |name: &str| {
        let path = dir.join(name);
        fs::read(&path).map_err(|e| DatasetError::io(&path, e))
    };
    let bad = |m: String| DatasetError::InvalidRange(format!("pool {item}: {m}"));
    let poses: Vec<[f64; 6]> = serde_json::from_slice(&read("poses.json")?).map_err(|e| bad(e.to_string()))?;
    let meta: PoolMeta = serde_json::from_slice(&read("pool.json")?).map_err(|e| bad(e.to_string()))?;
    if meta.size != poses.len() {
        return Err(bad(format!("pool.json says {} snapshots, poses.json has {}", meta.size, poses.len())));
    }
    let snapshots = poses
        .iter()
        .enumerate()
        .map(|(i, p)| Ok(Snapshot::from_pgm(&read(&format!("{i}.pgm"))?, CameraPose::from_array(*p))?))
        .collect::<Result<Vec<_>, DatasetError>>()?;
    Ok(SnapshotPool { item: item.to_string(), seed: meta.seed, snapshots })
}

/// Draws `n` uniformly from `counts` (capped at the pool size), then `n`
/// distinct indices uniformly without replacement.
pub fn sample_scene_indices(pool_len: usize, counts: ViewCount, rng: &mut impl Rng) -> Result<Vec<usize>, DatasetError> {
    if pool_len < counts.min || counts.min == 0 {
        return Err(DatasetError::PoolTooSmall { size: pool_len, min: counts.min.max(1) });
    }
    let n = rng.gen_range(counts.min..=counts.max.min(pool_len).max(counts.min));
    Ok(rand::seq::index::sample(rng, pool_len, n).into_vec())
}

pub fn scene_from_indices(pool: &SnapshotPool, indices: &[usize], r_max: f64, target: Option<TimeVector>) -> Scene {
    let views = indices
        .iter()
        .map(|&i| {
            let s = &pool.snapshots[i];
            SceneView { image: snapshot_to_tensor(s), pose: pose_to_feature(&s.pose, r_max) }
        })
        .collect();
    Scene { item: pool.item.clone(), views, target }
}

/// A fresh random scene from the pool.
pub fn sample_epoch_scene(
    pool: &SnapshotPool,
    counts: ViewCount,
    r_max: f64,
    rng: &mut impl Rng,
) -> Result<Scene, DatasetError> {
    let idx = sample_scene_indices(pool.len(), counts, rng)?;
    Ok(scene_from_indices(pool, &idx, r_max, None))
}

fn binomial(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        // c * (n - i) is divisible by (i + 1): it is (i + 1) * C(n, i + 1)
        c = c.checked_mul((n - i) as u128)? / (i + 1) as u128;
    }
    Some(c)
}

/// Number of distinct scenes: sum of C(pool_size, n) for n in n_min..=n_max.
pub fn count_scene_combinations(pool_size: u64, n_min: u64, n_max: u64) -> Result<u128, DatasetError> {
    if n_min > n_max || n_max > pool_size {
        return Err(DatasetError::InvalidRange(format!("need n_min <= n_max <= pool_size, got {n_min}, {n_max}, {pool_size}")));
    }
    (n_min..=n_max).try_fold(0u128, |acc, n| {
        binomial(pool_size, n)
            .and_then(|c| acc.checked_add(c))
            .ok_or_else(|| DatasetError::InvalidRange("count overflows 128 bits".into()))
    })
}
