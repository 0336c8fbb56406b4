//! Manufacturing time prediction from triangle meshes.
//!
//! An item's mesh is rendered into a small set of posed grayscale snapshots
//! (a scene). Each snapshot is encoded independently, the per-view latents
//! are averaged, and a fully connected decoder emits one non-negative time
//! per production step.

pub mod autodiff;
pub mod cli;
pub mod dataset;
pub mod mesh;
pub mod metrics;
pub mod model;
pub mod raster;
pub mod rng;
pub mod view;
