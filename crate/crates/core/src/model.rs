//! The set predictor: per-view conv encoder, pose fusion, mean over views,
//! and an MLP decoder with non-negative outputs.
//!
//! ```text
//! image [1,S,S] -> conv3x3/2 (8) -> relu -> conv3x3/2 (16) -> relu
//!              -> conv3x3/2 (32) -> relu -> global avg pool -> dense (latent)
//! latent ++ pose[6] -> mean over views -> 256 -> 128 -> 32 -> k, relu after each
//! ```
//!
//! The final activations are multiplied by fixed per-step scales so that
//! unit-scale weights produce times in seconds.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use thiserror::Error;

use crate::autodiff::{Adam, AdamConfig, Scalar, Tape, Tensor, TensorError, Var};
use crate::dataset::{
    sample_epoch_scene, sample_scene_indices, scene_from_indices, static_augment, AugmentConfig, DatasetError, Scene,
    SceneView, SnapshotPool, TimeVector, ViewCount,
};
use crate::rng::substream;

pub const CONV_CHANNELS: [usize; 3] = [8, 16, 32];
pub const HIDDEN: [usize; 3] = [256, 128, 32];
pub const POSE_DIM: usize = 6;
pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"TPNN";

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("scene has no views")]
    EmptyScene,
    #[error("image is {got:?}, model expects [1, {size}, {size}]")]
    ImageSize { got: Vec<usize>, size: usize },
    #[error("target has {got} entries, model has {k} outputs")]
    TargetSize { got: usize, k: usize },
    #[error("loss became non-finite in epoch {epoch}{}", match .last_good { Some(e) => format!(" (last good epoch {e})"), None => String::new() })]
    NonFiniteLoss { epoch: u64, last_good: Option<u64> },
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("not a weights file (bad magic)")]
    BadMagic,
    #[error("weights format version {found}, expected {FORMAT_VERSION}")]
    VersionMismatch { found: u32 },
    #[error("weights file is truncated: {0}")]
    Truncated(String),
    #[error("weights file is corrupt: {0}")]
    Corrupt(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// `output_scale` holds one fixed multiplier per output; see
/// [`ModelConfig::scales_from_labels`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub image_size: usize,
    pub latent: usize,
    pub k: usize,
    pub output_scale: Vec<f32>,
}

pub const DEFAULT_OUTPUT_SCALE: f32 = 100.0;

impl Default for ModelConfig {
    fn default() -> Self {
        Self { image_size: 64, latent: 64, k: 6, output_scale: vec![DEFAULT_OUTPUT_SCALE; 6] }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        // three stride-2 convs need at least 3x3 inputs at every stage
        if self.image_size < 9 {
            return Err(ModelError::InvalidConfig(format!("image size {} < 9", self.image_size)));
        }
        if self.latent == 0 || self.k == 0 {
            return Err(ModelError::InvalidConfig("latent width and k must be positive".into()));
        }
        if self.output_scale.len() != self.k || !self.output_scale.iter().all(|s| s.is_finite() && *s > 0.0) {
            return Err(ModelError::InvalidConfig(format!("output scale {:?} for k = {}", self.output_scale, self.k)));
        }
        Ok(())
    }

    /// Per-step scales: the mean positive label of each step, falling back
    /// to the mean of all positive labels (or the default) for steps that
    /// are never required. Keeps every output's targets near unit scale
    /// before the final ReLU.
    pub fn scales_from_labels(k: usize, labels: &[&[f64]]) -> Vec<f32> {
        let positive_mean = |vals: &mut dyn Iterator<Item = f64>| {
            let (s, n) = vals.filter(|&v| v > 0.0).fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
            (n > 0).then(|| s / n as f64)
        };
        let overall = positive_mean(&mut labels.iter().flat_map(|l| l.iter().copied())).unwrap_or(DEFAULT_OUTPUT_SCALE as f64);
        (0..k)
            .map(|j| positive_mean(&mut labels.iter().filter_map(|l| l.get(j).copied())).unwrap_or(overall) as f32)
            .collect()
    }

    /// Parameter names and shapes in storage order.
    pub fn param_shapes(&self) -> Vec<(String, Vec<usize>)> {
        let mut out = Vec::new();
        let mut cin = 1;
        for (i, &c) in CONV_CHANNELS.iter().enumerate() {
            out.push((format!("conv{}.weight", i + 1), vec![c, cin, 3, 3]));
            out.push((format!("conv{}.bias", i + 1), vec![c]));
            cin = c;
        }
        out.push(("proj.weight".into(), vec![self.latent, cin]));
        out.push(("proj.bias".into(), vec![self.latent]));
        let mut n = self.latent + POSE_DIM;
        for (i, &m) in HIDDEN.iter().chain(std::iter::once(&self.k)).enumerate() {
            let name = if i == HIDDEN.len() { "out".to_string() } else { format!("fc{}", i + 1) };
            out.push((format!("{name}.weight"), vec![m, n]));
            out.push((format!("{name}.bias"), vec![m]));
            n = m;
        }
        out
    }
}

/// Augmentation regime used during training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Augmentation {
    /// Fresh scene from the item's snapshot pool every epoch.
    Dynamic,
    /// One fixed scene per item, image-augmented every epoch.
    Static(AugmentConfig),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: u64,
    pub batch: usize,
    pub lr: f64,
    pub seed: u64,
    pub augmentation: Augmentation,
    pub views: ViewCount,
    pub r_max: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch: 16,
            lr: 1e-3,
            seed: 0,
            augmentation: Augmentation::Dynamic,
            views: ViewCount::default(),
            r_max: crate::view::DEFAULT_R_MAX,
        }
    }
}

/// A labeled training item.
#[derive(Debug, Clone, Copy)]
pub struct TrainItem<'a> {
    pub pool: &'a SnapshotPool,
    pub target: &'a TimeVector,
}

/// Mean per-scene loss and mean absolute error of one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub epoch: u64,
    pub split: String,
    pub mse: f64,
    pub mae: f64,
}

impl EpochLog {
    pub const CSV_HEADER: &'static str = "epoch,split,mse,mae";

    pub fn csv_row(&self) -> String {
        format!("{},{},{},{}", self.epoch, self.split, self.mse, self.mae)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictorModel<T: Scalar = f32> {
    pub config: ModelConfig,
    params: Vec<Tensor<T>>,
    pub optimizer: Option<Adam<T>>,
    /// Completed training epochs.
    pub epoch: u64,
}

impl<T: Scalar> PredictorModel<T> {
    /// He-uniform weights and zero biases drawn from the `init` substream.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = substream(seed, "init", "", 0);
        let params = config
            .param_shapes()
            .into_iter()
            .map(|(_, shape)| {
                if shape.len() == 1 {
                    Tensor::zeros(&shape)
                } else {
                    let fan_in = shape[1..].iter().product();
                    Tensor::he_uniform(&shape, fan_in, &mut rng)
                }
            })
            .collect();
        Ok(Self { config, params, optimizer: None, epoch: 0 })
    }

    pub fn params(&self) -> &[Tensor<T>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Tensor<T>] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(Tensor::len).sum()
    }

    /// Copy in another precision; training state is dropped.
    pub fn cast<U: Scalar>(&self) -> PredictorModel<U> {
        PredictorModel { config: self.config.clone(), params: self.params.iter().map(Tensor::cast).collect(), optimizer: None, epoch: self.epoch }
    }

    /// Records the parameters as trainable leaves.
    pub fn bind(&self, tape: &mut Tape<T>) -> Vec<Var> {
        self.params.iter().map(|p| tape.leaf(p.clone(), true)).collect()
    }

    fn check_image(&self, image: &Tensor<T>) -> Result<(), ModelError> {
        let s = self.config.image_size;
        if image.shape() != [1, s, s] {
            return Err(ModelError::ImageSize { got: image.shape().to_vec(), size: s });
        }
        Ok(())
    }

    /// Per-view latent: image embedding concatenated with the pose feature.
    pub fn encode_on(&self, tape: &mut Tape<T>, p: &[Var], image: &Tensor<T>, pose: &[f32; 6]) -> Result<Var, ModelError> {
        self.check_image(image)?;
        let mut h = tape.leaf(image.clone(), false);
        for layer in 0..CONV_CHANNELS.len() {
            let c = tape.conv2d(h, p[2 * layer], p[2 * layer + 1], 2)?;
            h = tape.relu(c);
        }
        let pooled = tape.global_avg_pool(h)?;
        let n = 2 * CONV_CHANNELS.len();
        let embedding = tape.dense(pooled, p[n], p[n + 1])?;
        let pose = tape.leaf(Tensor::new(&[POSE_DIM], pose.iter().map(|&v| T::from_f64(v as f64)).collect())?, false);
        Ok(tape.concat(&[embedding, pose])?)
    }

    /// Full forward pass over a set of views; returns the `[k]` prediction.
    pub fn forward_on(&self, tape: &mut Tape<T>, p: &[Var], views: &[(Tensor<T>, [f32; 6])]) -> Result<Var, ModelError> {
        if views.is_empty() {
            return Err(ModelError::EmptyScene);
        }
        let latents = views.iter().map(|(img, pose)| self.encode_on(tape, p, img, pose)).collect::<Result<Vec<_>, _>>()?;
        let mut h = tape.mean_over_set(&latents)?;
        let first = 2 * CONV_CHANNELS.len() + 2;
        for layer in 0..=HIDDEN.len() {
            let d = tape.dense(h, p[first + 2 * layer], p[first + 2 * layer + 1])?;
            h = tape.relu(d);
        }
        let scale: Vec<T> = self.config.output_scale.iter().map(|&s| T::from_f64(s as f64)).collect();
        Ok(tape.scale_each(h, &scale)?)
    }

    /// MSE between the prediction for `views` and `target`.
    pub fn loss_on(
        &self,
        tape: &mut Tape<T>,
        p: &[Var],
        views: &[(Tensor<T>, [f32; 6])],
        target: &[T],
    ) -> Result<(Var, Var), ModelError> {
        if target.len() != self.config.k {
            return Err(ModelError::TargetSize { got: target.len(), k: self.config.k });
        }
        let pred = self.forward_on(tape, p, views)?;
        let t = tape.leaf(Tensor::new(&[target.len()], target.to_vec())?, false);
        Ok((tape.mse_loss(pred, t)?, pred))
    }

    pub fn encode(&self, image: &Tensor<T>, pose: &[f32; 6]) -> Result<Vec<T>, ModelError> {
        let mut tape = Tape::new();
        let p = self.bind_frozen(&mut tape);
        let v = self.encode_on(&mut tape, &p, image, pose)?;
        Ok(tape.value(v).data().to_vec())
    }

    pub fn predict_views(&self, views: &[(Tensor<T>, [f32; 6])]) -> Result<Vec<T>, ModelError> {
        let mut tape = Tape::new();
        let p = self.bind_frozen(&mut tape);
        let v = self.forward_on(&mut tape, &p, views)?;
        Ok(tape.value(v).data().to_vec())
    }

    fn bind_frozen(&self, tape: &mut Tape<T>) -> Vec<Var> {
        self.params.iter().map(|p| tape.leaf(p.clone(), false)).collect()
    }
}

fn scene_views(scene: &Scene) -> Vec<(Tensor<f32>, [f32; 6])> {
    scene.views.iter().map(|v: &SceneView| (v.image.clone(), v.pose)).collect()
}

impl PredictorModel<f32> {
    /// Predicted times (seconds) for a scene.
    pub fn predict(&self, scene: &Scene) -> Result<Vec<f32>, ModelError> {
        self.predict_views(&scene_views(scene))
    }

    /// Prediction averaged over `n_scenes` scenes drawn from the pool with
    /// the `eval` substream of `(seed, item)`.
    pub fn predict_pool(
        &self,
        pool: &SnapshotPool,
        n_scenes: usize,
        views: ViewCount,
        r_max: f64,
        seed: u64,
    ) -> Result<Vec<f64>, ModelError> {
        let mut acc = vec![0f64; self.config.k];
        for j in 0..n_scenes.max(1) {
            let mut rng = substream(seed, "eval", &pool.item, j as u64);
            let idx = sample_scene_indices(pool.len(), views, &mut rng)?;
            let pred = self.predict(&scene_from_indices(pool, &idx, r_max, None))?;
            for (a, p) in acc.iter_mut().zip(pred) {
                *a += p as f64;
            }
        }
        Ok(acc.into_iter().map(|a| a / n_scenes.max(1) as f64).collect())
    }

    /// Trains for `cfg.epochs` epochs, calling `on_epoch` after each one.
    /// Epoch randomness comes from the `epoch` substream keyed by the global
    /// epoch counter, so resumed runs continue the same sequence.
    pub fn train(
        &mut self,
        items: &[TrainItem],
        cfg: &TrainConfig,
        mut on_epoch: impl FnMut(&EpochLog),
    ) -> Result<Vec<EpochLog>, ModelError> {
        if cfg.batch == 0 {
            return Err(ModelError::InvalidConfig("batch size must be positive".into()));
        }
        if items.is_empty() {
            return Err(DatasetError::EmptyDataset.into());
        }
        for it in items {
            if it.target.len() != self.config.k {
                return Err(ModelError::TargetSize { got: it.target.len(), k: self.config.k });
            }
        }
        let adam = AdamConfig { lr: cfg.lr, ..AdamConfig::default() };
        match &mut self.optimizer {
            Some(opt) => opt.config = adam,
            None => self.optimizer = Some(Adam::new(adam, &self.params)),
        }
        let base_scenes: Vec<Scene> = match cfg.augmentation {
            Augmentation::Dynamic => Vec::new(),
            Augmentation::Static(_) => items
                .iter()
                .map(|it| {
                    let mut rng = substream(cfg.seed, "static-base", &it.pool.item, 0);
                    sample_epoch_scene(it.pool, cfg.views, cfg.r_max, &mut rng)
                })
                .collect::<Result<_, _>>()?,
        };

        let mut logs = Vec::new();
        let mut last_good = self.epoch.checked_sub(1);
        for _ in 0..cfg.epochs {
            let epoch = self.epoch;
            let mut rng = substream(cfg.seed, "epoch", "", epoch);
            let mut order: Vec<usize> = (0..items.len()).collect();
            order.shuffle(&mut rng);
            let mut scenes = Vec::with_capacity(items.len());
            for &i in &order {
                let scene = match cfg.augmentation {
                    Augmentation::Dynamic => sample_epoch_scene(items[i].pool, cfg.views, cfg.r_max, &mut rng)?,
                    Augmentation::Static(aug) => static_augment(&base_scenes[i], &mut rng, &aug),
                };
                scenes.push((scene, i));
            }

            let (mut mse_sum, mut abs_sum) = (0f64, 0f64);
            for batch in scenes.chunks(cfg.batch) {
                let mut tape = Tape::new();
                let p = self.bind(&mut tape);
                let mut losses = Vec::with_capacity(batch.len());
                for (scene, i) in batch {
                    let target: Vec<f32> = items[*i].target.times().iter().map(|&t| t as f32).collect();
                    let (loss, pred) = self.loss_on(&mut tape, &p, &scene_views(scene), &target)?;
                    mse_sum += tape.value(loss).data()[0] as f64;
                    abs_sum += tape.value(pred).data().iter().zip(&target).map(|(a, b)| (a - b).abs() as f64).sum::<f64>();
                    losses.push(loss);
                }
                let total = tape.mean_over_set(&losses)?;
                if !tape.value(total).all_finite() {
                    return Err(ModelError::NonFiniteLoss { epoch, last_good });
                }
                let mut grads = tape.backward(total)?;
                let g: Vec<Tensor<f32>> = p
                    .iter()
                    .zip(&self.params)
                    .map(|(v, w)| grads.take(*v).unwrap_or_else(|| Tensor::zeros(w.shape())))
                    .collect();
                if !g.iter().all(Tensor::all_finite) {
                    return Err(ModelError::NonFiniteLoss { epoch, last_good });
                }
                let opt = self.optimizer.as_mut().expect("created above");
                opt.adam_step(&mut self.params, &g)?;
            }
            let n = scenes.len() as f64;
            let log = EpochLog { epoch, split: "train".into(), mse: mse_sum / n, mae: abs_sum / (n * self.config.k as f64) };
            if !(log.mse.is_finite() && self.params.iter().all(Tensor::all_finite)) {
                return Err(ModelError::NonFiniteLoss { epoch, last_good });
            }
            on_epoch(&log);
            logs.push(log);
            last_good = Some(epoch);
            self.epoch += 1;
        }
        Ok(logs)
    }

    /// Serialises configuration, parameters and training state.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        let c = &self.config;
        let scalar = |v: f32| Tensor::scalar(v);
        write_block(&mut out, "config.image_size", &scalar(c.image_size as f32));
        write_block(&mut out, "config.latent", &scalar(c.latent as f32));
        write_block(&mut out, "config.k", &scalar(c.k as f32));
        write_block(&mut out, "config.output_scale", &Tensor::from_vec(c.output_scale.clone()));
        for ((name, _), p) in c.param_shapes().iter().zip(&self.params) {
            write_block(&mut out, name, p);
        }
        // epoch counter split into two exactly representable halves
        write_block(&mut out, "state.epoch", &Tensor::from_vec(split_u64(self.epoch)));
        if let Some(opt) = &self.optimizer {
            write_block(&mut out, "opt.step", &Tensor::from_vec(split_u64(opt.step)));
            for ((name, _), (m, v)) in c.param_shapes().iter().zip(opt.m.iter().zip(&opt.v)) {
                write_block(&mut out, &format!("opt.m/{name}"), m);
                write_block(&mut out, &format!("opt.v/{name}"), v);
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ModelError> {
        if bytes.len() < 4 {
            return Err(ModelError::Truncated("missing header".into()));
        }
        if &bytes[..4] != MAGIC {
            return Err(ModelError::BadMagic);
        }
        let mut r = Reader { bytes, pos: 4 };
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(ModelError::VersionMismatch { found: version });
        }
        let mut blocks: Vec<(String, Tensor<f32>)> = Vec::new();
        while r.pos < bytes.len() {
            blocks.push(r.block()?);
        }
        let mut take = |name: &str| -> Result<Tensor<f32>, ModelError> {
            let i = blocks
                .iter()
                .position(|(n, _)| n == name)
                .ok_or_else(|| ModelError::Truncated(format!("block {name} missing")))?;
            Ok(blocks.remove(i).1)
        };
        let scalar = |t: Tensor<f32>, name: &str| -> Result<f32, ModelError> {
            if t.len() != 1 {
                return Err(ModelError::Corrupt(format!("{name} is not a scalar")));
            }
            Ok(t.data()[0])
        };
        let as_count = |v: f32, name: &str| -> Result<usize, ModelError> {
            if v >= 0.0 && v.fract() == 0.0 && v < 16_777_216.0 {
                Ok(v as usize)
            } else {
                Err(ModelError::Corrupt(format!("{name} = {v}")))
            }
        };
        let config = ModelConfig {
            image_size: as_count(scalar(take("config.image_size")?, "image_size")?, "image_size")?,
            latent: as_count(scalar(take("config.latent")?, "latent")?, "latent")?,
            k: as_count(scalar(take("config.k")?, "k")?, "k")?,
            output_scale: take("config.output_scale")?.into_data(),
        };
        config.validate().map_err(|e| ModelError::Corrupt(e.to_string()))?;
        let shapes = config.param_shapes();
        let mut params = Vec::with_capacity(shapes.len());
        for (name, shape) in &shapes {
            let t = take(name)?;
            if t.shape() != shape.as_slice() {
                return Err(ModelError::Corrupt(format!("{name} has shape {:?}, expected {shape:?}", t.shape())));
            }
            params.push(t);
        }
        let epoch = join_u64(&take("state.epoch")?)?;
        let optimizer = match take("opt.step") {
            Ok(step) => {
                let step = join_u64(&step)?;
                let mut m = Vec::new();
                let mut v = Vec::new();
                for (name, shape) in &shapes {
                    for (prefix, dst) in [("opt.m", &mut m), ("opt.v", &mut v)] {
                        let t = take(&format!("{prefix}/{name}"))?;
                        if t.shape() != shape.as_slice() {
                            return Err(ModelError::Corrupt(format!("{prefix}/{name} shape {:?}", t.shape())));
                        }
                        dst.push(t);
                    }
                }
                Some(Adam { config: AdamConfig::default(), step, m, v })
            }
            Err(_) => None,
        };
        if let Some((name, _)) = blocks.first() {
            return Err(ModelError::Corrupt(format!("unexpected block {name}")));
        }
        Ok(Self { config, params, optimizer, epoch })
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        fs::write(path, self.to_bytes()).map_err(|e| ModelError::Io { path: path.display().to_string(), source: e })
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let bytes = fs::read(path).map_err(|e| ModelError::Io { path: path.display().to_string(), source: e })?;
        Self::from_bytes(&bytes)
    }
}

fn split_u64(v: u64) -> Vec<f32> {
    vec![(v >> 20) as f32, (v & 0xF_FFFF) as f32]
}

fn join_u64(t: &Tensor<f32>) -> Result<u64, ModelError> {
    match t.data() {
        &[hi, lo] if hi >= 0.0 && lo >= 0.0 && hi.fract() == 0.0 && lo.fract() == 0.0 && lo < 1_048_576.0 => {
            Ok(((hi as u64) << 20) | lo as u64)
        }
        _ => Err(ModelError::Corrupt("bad counter block".into())),
    }
}

fn write_block(out: &mut Vec<u8>, name: &str, t: &Tensor<f32>) {
    out.extend_from_slice(&(name.len() as u32).to_le_bytes());
    out.extend_from_slice(name.as_bytes());
    out.extend_from_slice(&(t.rank() as u32).to_le_bytes());
    for &d in t.shape() {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for &v in t.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], ModelError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| ModelError::Truncated(format!("need {n} bytes at offset {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, ModelError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn block(&mut self) -> Result<(String, Tensor<f32>), ModelError> {
        let len = self.u32()? as usize;
        let name = String::from_utf8(self.take(len)?.to_vec()).map_err(|_| ModelError::Corrupt("non-UTF-8 block name".into()))?;
        let rank = self.u32()? as usize;
        if rank == 0 || rank > 8 {
            return Err(ModelError::Corrupt(format!("{name}: rank {rank}")));
        }
        let shape = (0..rank).map(|_| self.u32().map(|d| d as usize)).collect::<Result<Vec<_>, _>>()?;
        let n = shape.iter().try_fold(1usize, |a, &d| a.checked_mul(d)).ok_or_else(|| ModelError::Corrupt(format!("{name}: shape overflow")))?;
        let payload = self.take(n.checked_mul(4).ok_or_else(|| ModelError::Corrupt(format!("{name}: size overflow")))?)?;
        let data = payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect();
        let t = Tensor::new(&shape, data).map_err(|e| ModelError::Corrupt(format!("{name}: {e}")))?;
        Ok((name, t))
    }
}
