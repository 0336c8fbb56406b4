//! Items, labels, splits, snapshot pools, scenes and the synthetic generator.

mod augment;
mod manifest;
mod pool;
mod synth;

use std::path::PathBuf;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::MeshError;
use crate::raster::RenderError;
use crate::rng::substream;
use crate::view::ViewError;

pub use augment::{affine_transform, static_augment, Affine, AugmentConfig};
pub use manifest::{read_manifest, read_mesh_file, write_manifest, ManifestItem};
pub use pool::{
    build_pool, build_pools, count_scene_combinations, load_pool, render_quantized, sample_epoch_scene,
    sample_scene_indices, save_pool, scene_from_indices, Scene, SceneView, SnapshotPool, ViewCount,
};
pub use synth::{generate_synthetic_item, Bend, Joint, JointKind, Part, PartShape, Recipe};

pub const STEP_NAMES: [&str; 6] = ["welding", "cutting", "bending", "screwing", "drilling", "assembling"];
pub const K: usize = STEP_NAMES.len();
pub const DEFAULT_POOL_SIZE: usize = 100;
pub const DEFAULT_TEST_FRACTION: f64 = 60.0 / 539.0;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("test fraction {0} is outside [0, 1]")]
    InvalidFraction(f64),
    #[error("pool of {size} snapshots is smaller than the minimum scene size {min}")]
    PoolTooSmall { size: usize, min: usize },
    #[error("invalid range: {0}")]
    InvalidRange(String),
    #[error("invalid time vector: {0}")]
    InvalidTimes(String),
    #[error("no pool for item {0}")]
    PoolMissing(String),
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("item {item}: {source}")]
    Item { item: String, source: Box<DatasetError> },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    View(#[from] ViewError),
    #[error(transparent)]
    Render(#[from] RenderError),
}

impl DatasetError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    pub(crate) fn for_item(self, item: &str) -> Self {
        Self::Item { item: item.to_string(), source: Box::new(self) }
    }
}

/// Per-step durations in seconds; 0 means the step is not required.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TimeVector(Vec<f64>);

impl TimeVector {
    pub fn new(times: Vec<f64>) -> Result<Self, DatasetError> {
        if times.is_empty() {
            return Err(DatasetError::InvalidTimes("empty".into()));
        }
        if let Some(t) = times.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return Err(DatasetError::InvalidTimes(format!("entry {t} is not a non-negative number")));
        }
        Ok(Self(times))
    }

    pub fn times(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Steps with a nonzero time.
    pub fn required(&self) -> usize {
        self.0.iter().filter(|&&t| t > 0.0).count()
    }
}

impl TryFrom<Vec<f64>> for TimeVector {
    type Error = DatasetError;
    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<TimeVector> for Vec<f64> {
    fn from(t: TimeVector) -> Self {
        t.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// Deterministic shuffle-and-cut split. The test set gets
/// `round(n * test_fraction)` items; both halves keep the input order.
pub fn split_dataset<T: Clone>(items: &[T], test_fraction: f64, seed: u64) -> Result<(Vec<T>, Vec<T>), DatasetError> {
    if items.is_empty() {
        return Err(DatasetError::EmptyDataset);
    }
    if !(0.0..=1.0).contains(&test_fraction) {
        return Err(DatasetError::InvalidFraction(test_fraction));
    }
    let n_test = (items.len() as f64 * test_fraction).round() as usize;
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.shuffle(&mut substream(seed, "split", "", 0));
    let mut is_test = vec![false; items.len()];
    for &i in &order[..n_test] {
        is_test[i] = true;
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (item, t) in items.iter().zip(is_test) {
        if t { test.push(item.clone()) } else { train.push(item.clone()) }
    }
    Ok((train, test))
}
