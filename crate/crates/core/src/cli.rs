//! Command-line front end: `generate`, `pools`, `train`, `eval`, `predict`.
//!
//! Any subcommand accepts `--config FILE`, a `key = value` file whose
//! entries stand in for flags not given on the command line. Machine-readable
//! results go to files or stdout, progress and summaries to stderr.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::builder::TypedValueParser as _;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::dataset::{
    build_pools, generate_synthetic_item, load_pool, read_manifest, read_mesh_file, render_quantized, save_pool,
    split_dataset, write_manifest, AugmentConfig, DatasetError, ManifestItem, Split, SnapshotPool, TimeVector,
    ViewCount, DEFAULT_POOL_SIZE, DEFAULT_TEST_FRACTION, K, STEP_NAMES,
};
use crate::mesh::{normalize, write_obj, MeshError};
use crate::metrics::{evaluate, EvalError, EvalReport, DEFAULT_EVAL_SCENES};
use crate::model::{Augmentation, EpochLog, ModelConfig, ModelError, PredictorModel, TrainConfig, TrainItem};
use crate::raster::snapshot_to_tensor;
use crate::view::{
    pose_to_feature, CameraIntrinsics, Shell, ViewError, ViewSampler, DEFAULT_FOV_DEG, DEFAULT_MAX_ATTEMPTS,
    DEFAULT_R_MAX, DEFAULT_R_MIN,
};

/// Environment variable capping the number of pool-rendering threads.
pub const THREADS_ENV: &str = "TECHTIME_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config file {path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    View(#[from] ViewError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl CliError {
    /// 2 for usage errors, 3 when no admissible camera pose exists, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => 2,
            _ if self.is_infeasible() => 3,
            _ => 1,
        }
    }

    fn is_infeasible(&self) -> bool {
        fn dataset(e: &DatasetError) -> bool {
            match e {
                DatasetError::View(ViewError::SamplingExhausted { .. }) => true,
                DatasetError::Item { source, .. } => dataset(source),
                _ => false,
            }
        }
        fn model(e: &ModelError) -> bool {
            matches!(e, ModelError::Dataset(d) if dataset(d))
        }
        match self {
            CliError::View(ViewError::SamplingExhausted { .. }) => true,
            CliError::Dataset(d) => dataset(d),
            CliError::Model(m) => model(m),
            CliError::Eval(EvalError::Model(m)) => model(m),
            _ => false,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Parser)]
#[command(name = "techtime", version, about = "Per-step manufacturing time prediction from 3D meshes")]
pub struct Cli {
    /// File of `key = value` lines supplying flags not given on the command line
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic items: meshes, time labels and a manifest
    Generate(GenerateArgs),
    /// Render snapshot pools for every item in a manifest
    Pools(PoolsArgs),
    /// Train a model on the train split
    Train(TrainArgs),
    /// Evaluate a model; prints an EvalReport JSON object
    Eval(EvalArgs),
    /// Predict step times for one mesh; prints JSON
    Predict(PredictArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Number of items
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub items: u64,
    /// Complexity level 1-3; drawn per item when omitted
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub complexity: Option<u8>,
    /// Run seed
    #[arg(long)]
    pub seed: u64,
    /// Output directory (receives manifest.jsonl and meshes/)
    #[arg(long)]
    pub out: PathBuf,
    /// Fraction of items assigned to the test split
    #[arg(long, default_value_t = DEFAULT_TEST_FRACTION)]
    pub test_fraction: f64,
}

#[derive(Debug, Clone, Args)]
pub struct CameraArgs {
    /// Vertical field of view in degrees
    #[arg(long, default_value_t = DEFAULT_FOV_DEG)]
    pub fov: f64,
    /// Inner radius of the camera shell (unit-sphere units)
    #[arg(long, default_value_t = DEFAULT_R_MIN)]
    pub r_min: f64,
    /// Outer radius of the camera shell; also scales pose features
    #[arg(long, default_value_t = DEFAULT_R_MAX)]
    pub r_max: f64,
    /// Rejection-sampling attempts per pose
    #[arg(long, default_value_t = DEFAULT_MAX_ATTEMPTS)]
    pub max_attempts: usize,
}

impl CameraArgs {
    fn sampler(&self, image_size: usize) -> ViewSampler {
        ViewSampler {
            intrinsics: CameraIntrinsics { fov_y: self.fov.to_radians(), ..CameraIntrinsics::with_size(image_size, image_size) },
            shell: Shell { r_min: self.r_min, r_max: self.r_max },
            max_attempts: self.max_attempts,
        }
    }
}

#[derive(Debug, Args)]
pub struct PoolsArgs {
    /// Item manifest
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output directory, one sub-directory per item
    #[arg(long)]
    pub out: PathBuf,
    /// Snapshots per item
    #[arg(long, default_value_t = DEFAULT_POOL_SIZE, value_parser = clap::value_parser!(u64).range(1..).map(|v| v as usize))]
    pub pool_size: usize,
    /// Snapshot width and height in pixels
    #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u64).range(1..).map(|v| v as usize))]
    pub image_size: usize,
    /// Run seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub camera: CameraArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ViewArgs {
    /// Fewest views per scene
    #[arg(long, default_value_t = 3)]
    pub views_min: usize,
    /// Most views per scene
    #[arg(long, default_value_t = 5)]
    pub views_max: usize,
}

impl ViewArgs {
    fn count(&self) -> Result<ViewCount, CliError> {
        if self.views_min == 0 || self.views_min > self.views_max {
            return Err(CliError::Usage(format!("invalid view range {}..={}", self.views_min, self.views_max)));
        }
        Ok(ViewCount { min: self.views_min, max: self.views_max })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AugMode {
    /// Fresh scene from the pool every epoch
    Gqn,
    /// One fixed scene per item with shift/rotate/zoom augmentation
    Static,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Item manifest
    #[arg(long)]
    pub manifest: PathBuf,
    /// Pool directory written by `pools`
    #[arg(long)]
    pub pools: PathBuf,
    /// Training epochs
    #[arg(long, default_value_t = 100)]
    pub epochs: u64,
    /// Scenes per optimiser step
    #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u64).range(1..).map(|v| v as usize))]
    pub batch: usize,
    /// Adam learning rate
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    /// Epoch from which the learning rate is multiplied by --lr-decay
    #[arg(long)]
    pub lr_decay_epoch: Option<u64>,
    /// Learning-rate factor applied from --lr-decay-epoch on
    #[arg(long, default_value_t = 0.1)]
    pub lr_decay: f64,
    /// Augmentation regime
    #[arg(long, value_enum, default_value_t = AugMode::Gqn)]
    pub aug: AugMode,
    /// Run seed
    #[arg(long)]
    pub seed: u64,
    /// Weights file to write
    #[arg(long)]
    pub out: PathBuf,
    /// Loss log [default: the weights path with extension .csv]
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Latent width of the image embedding
    #[arg(long, default_value_t = 64)]
    pub latent: usize,
    #[command(flatten)]
    pub views: ViewArgs,
    /// Camera shell radius used to scale pose features
    #[arg(long, default_value_t = DEFAULT_R_MAX)]
    pub r_max: f64,
    /// Static augmentation: maximum shift in pixels
    #[arg(long, default_value_t = 6.0)]
    pub shift_px: f64,
    /// Static augmentation: maximum rotation in degrees
    #[arg(long, default_value_t = 15.0)]
    pub rot_deg: f64,
    /// Static augmentation: smallest zoom factor
    #[arg(long, default_value_t = 0.9)]
    pub zoom_min: f64,
    /// Static augmentation: largest zoom factor
    #[arg(long, default_value_t = 1.1)]
    pub zoom_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Test,
    All,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Item manifest
    #[arg(long)]
    pub manifest: PathBuf,
    /// Pool directory written by `pools`
    #[arg(long)]
    pub pools: PathBuf,
    /// Weights file
    #[arg(long)]
    pub weights: PathBuf,
    /// Scenes averaged per item
    #[arg(long, default_value_t = DEFAULT_EVAL_SCENES, value_parser = clap::value_parser!(u64).range(1..).map(|v| v as usize))]
    pub scenes_per_item: usize,
    /// Items to evaluate
    #[arg(long, value_enum, default_value_t = SplitArg::Test)]
    pub split: SplitArg,
    /// Run seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub views: ViewArgs,
    /// Camera shell radius used to scale pose features
    #[arg(long, default_value_t = DEFAULT_R_MAX)]
    pub r_max: f64,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// OBJ or STL mesh
    #[arg(long)]
    pub mesh: PathBuf,
    /// Weights file
    #[arg(long)]
    pub weights: PathBuf,
    /// Number of rendered views
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..).map(|v| v as usize))]
    pub views: usize,
    /// Run seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub camera: CameraArgs,
}

/// Resolved training configuration, recorded as `# key=value` lines at the
/// top of the loss log.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub manifest: PathBuf,
    pub pools: PathBuf,
    pub weights: PathBuf,
    pub image_size: usize,
    pub pool_size: usize,
    pub views_min: usize,
    pub views_max: usize,
    pub r_max: f64,
    pub epochs: u64,
    pub batch: usize,
    pub lr: f64,
    pub lr_decay_epoch: Option<u64>,
    pub lr_decay: f64,
    pub seed: u64,
    pub aug: AugMode,
    pub latent: usize,
    pub k: usize,
    pub steps: Vec<String>,
    pub output_scale: Vec<f64>,
}

impl RunConfig {
    pub fn header(&self) -> String {
        let value = serde_json::to_value(self).expect("run config serialises");
        let mut out = String::new();
        for (key, v) in value.as_object().expect("struct serialises to an object") {
            let text = match v {
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Null => "none".to_string(),
                other => other.to_string(),
            };
            let _ = writeln!(out, "# {key}={text}");
        }
        out
    }
}

/// Parses `args` (program name first), runs the command and maps the result
/// to a process exit code, printing errors to stderr.
pub fn main_with_args(args: impl IntoIterator<Item = OsString>) -> ExitCode {
    let args: Vec<OsString> = args.into_iter().collect();
    let args = match apply_config_file(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// Appends `--key value` for every config-file entry whose flag is absent
/// from `args`, so command-line flags take precedence over the file and the
/// file over built-in defaults.
pub fn apply_config_file(mut args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let mut config = None;
    let mut subcommand = None;
    let mut i = 1;
    while i < args.len() {
        let a = args[i].to_string_lossy();
        if a == "--config" {
            config = args.get(i + 1).map(PathBuf::from);
            i += 2;
            continue;
        }
        if let Some(path) = a.strip_prefix("--config=") {
            config = Some(PathBuf::from(path));
        } else if subcommand.is_none() && !a.starts_with('-') {
            subcommand = Some(a.into_owned());
        }
        i += 1;
    }
    let (Some(path), Some(sub)) = (config, subcommand) else {
        return Ok(args);
    };
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let table: toml::Table =
        text.parse().map_err(|e: toml::de::Error| CliError::Config { path: path.clone(), message: e.message().to_string() })?;

    let command = Cli::command();
    let known: Vec<String> = command
        .get_subcommands()
        .flat_map(|s| s.get_arguments().filter_map(|a| a.get_long().map(str::to_string)))
        .collect();
    let Some(sub_cmd) = command.find_subcommand(&sub) else {
        return Ok(args);
    };
    let longs: Vec<&str> = sub_cmd.get_arguments().filter_map(|a| a.get_long()).collect();
    let given: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    for (key, value) in &table {
        let long = key.replace('_', "-");
        if long == "config" || !known.contains(&long) {
            return Err(CliError::Config { path: path.clone(), message: format!("unknown key `{key}`") });
        }
        if !longs.contains(&long.as_str()) {
            continue;
        }
        let flag = format!("--{long}");
        if given.iter().any(|g| *g == flag || g.starts_with(&format!("{flag}="))) {
            continue;
        }
        let text = match value {
            toml::Value::String(s) => s.clone(),
            toml::Value::Integer(n) => n.to_string(),
            toml::Value::Float(x) => x.to_string(),
            other => {
                return Err(CliError::Config { path: path.clone(), message: format!("`{key}` has unsupported value {other}") })
            }
        };
        args.push(flag.into());
        args.push(text.into());
    }
    Ok(args)
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate(a) => cmd_generate(&a),
        Command::Pools(a) => cmd_pools(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Predict(a) => cmd_predict(&a),
    }
}

pub fn cmd_generate(a: &GenerateArgs) -> Result<(), CliError> {
    if !(0.0..=1.0).contains(&a.test_fraction) {
        return Err(CliError::Usage(format!("--test-fraction {} is outside [0, 1]", a.test_fraction)));
    }
    let mesh_dir = a.out.join("meshes");
    fs::create_dir_all(&mesh_dir).map_err(io_err(&mesh_dir))?;
    let ids: Vec<String> = (0..a.items).map(|i| format!("item-{i:04}")).collect();
    let (_, test) = split_dataset(&ids, a.test_fraction, a.seed)?;
    let mut records = Vec::with_capacity(ids.len());
    for id in &ids {
        let level = a.complexity.unwrap_or_else(|| crate::rng::substream(a.seed, "complexity", id, 0).gen_range(1..=3));
        let (mut mesh, times) = generate_synthetic_item(&mut crate::rng::substream(a.seed, "item", id, 0), level);
        mesh.id.clone_from(id);
        let rel = format!("meshes/{id}.obj");
        let path = a.out.join(&rel);
        fs::write(&path, write_obj(&mesh)).map_err(io_err(&path))?;
        let split = if test.contains(id) { Split::Test } else { Split::Train };
        records.push(ManifestItem { id: id.clone(), mesh: rel, times: Some(times), split });
    }
    write_manifest(&records, &a.out.join("manifest.jsonl"))?;
    eprintln!("generated {} items ({} test) in {}", records.len(), test.len(), a.out.display());
    Ok(())
}

fn manifest_dir(manifest: &Path) -> PathBuf {
    manifest.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn thread_cap() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        Err(_) => Ok(None),
    }
}

pub fn cmd_pools(a: &PoolsArgs) -> Result<(), CliError> {
    let records = read_manifest(&a.manifest)?;
    let dir = manifest_dir(&a.manifest);
    let meshes = records
        .iter()
        .map(|r| r.load_mesh(&dir).map(|m| (r.id.clone(), m)))
        .collect::<Result<Vec<_>, _>>()?;
    let sampler = a.camera.sampler(a.image_size);
    let pools = build_pools(&meshes, a.pool_size, &sampler, a.seed, thread_cap()?)?;
    for pool in &pools {
        save_pool(pool, &a.out)?;
    }
    eprintln!("rendered {} pools of {} snapshots into {}", pools.len(), a.pool_size, a.out.display());
    Ok(())
}

/// Reference items of `split` (all when `None`) with their pools.
fn load_split(
    manifest: &Path,
    pools: &Path,
    split: Option<Split>,
) -> Result<Vec<(SnapshotPool, TimeVector)>, CliError> {
    let records = read_manifest(manifest)?;
    let chosen: Vec<_> = records
        .into_iter()
        .filter(|r| split.is_none_or(|s| r.split == s))
        .filter_map(|r| r.times.map(|t| (r.id, t)))
        .collect();
    if chosen.is_empty() {
        return Err(DatasetError::EmptyDataset.into());
    }
    chosen
        .into_iter()
        .map(|(id, t)| Ok((load_pool(pools, &id)?, t)))
        .collect()
}

pub fn cmd_train(a: &TrainArgs) -> Result<(), CliError> {
    let views = a.views.count()?;
    let data = load_split(&a.manifest, &a.pools, Some(Split::Train))?;
    let first = &data[0].0;
    let image_size = first.snapshots.first().map(|s| s.width).ok_or(DatasetError::PoolTooSmall { size: 0, min: views.min })?;
    let labels: Vec<&[f64]> = data.iter().map(|(_, t)| t.times()).collect();
    let config = ModelConfig { image_size, latent: a.latent, k: K, output_scale: ModelConfig::scales_from_labels(K, &labels) };
    let run = RunConfig {
        manifest: a.manifest.clone(),
        pools: a.pools.clone(),
        weights: a.out.clone(),
        image_size,
        pool_size: first.len(),
        views_min: views.min,
        views_max: views.max,
        r_max: a.r_max,
        epochs: a.epochs,
        batch: a.batch,
        lr: a.lr,
        lr_decay_epoch: a.lr_decay_epoch,
        lr_decay: a.lr_decay,
        seed: a.seed,
        aug: a.aug,
        latent: a.latent,
        k: K,
        steps: STEP_NAMES.iter().map(|s| s.to_string()).collect(),
        output_scale: config.output_scale.iter().map(|s| s.to_string().parse().expect("float text parses")).collect(),
    };
    let augmentation = match a.aug {
        AugMode::Gqn => Augmentation::Dynamic,
        AugMode::Static => Augmentation::Static(AugmentConfig {
            max_shift_px: a.shift_px,
            max_rot_deg: a.rot_deg,
            zoom_range: (a.zoom_min, a.zoom_max),
        }),
    };
    let mut model = PredictorModel::<f32>::new(config, a.seed)?;
    let items: Vec<TrainItem> = data.iter().map(|(pool, target)| TrainItem { pool, target }).collect();

    let log_path = a.log.clone().unwrap_or_else(|| a.out.with_extension("csv"));
    let mut log = run.header();
    log.push_str(EpochLog::CSV_HEADER);
    log.push('\n');
    let report_every = (a.epochs / 10).max(1);
    let mut on_epoch = |l: &EpochLog| {
        log.push_str(&l.csv_row());
        log.push('\n');
        if (l.epoch + 1) % report_every == 0 || l.epoch + 1 == a.epochs {
            eprintln!("epoch {:>5}  mse {:>12.3}  mae {:>9.3}", l.epoch + 1, l.mse, l.mae);
        }
    };
    let decay_at = a.lr_decay_epoch.unwrap_or(a.epochs).min(a.epochs);
    let phases = [(decay_at, a.lr), (a.epochs - decay_at, a.lr * a.lr_decay)];
    let mut result = Ok(());
    for (epochs, lr) in phases {
        if epochs == 0 {
            continue;
        }
        let cfg = TrainConfig { epochs, batch: a.batch, lr, seed: a.seed, augmentation, views, r_max: a.r_max };
        if let Err(e) = model.train(&items, &cfg, &mut on_epoch) {
            result = Err(e);
            break;
        }
    }
    fs::write(&log_path, log).map_err(io_err(&log_path))?;
    result?;
    model.save(&a.out)?;
    eprintln!("wrote {} and {}", a.out.display(), log_path.display());
    Ok(())
}

pub fn cmd_eval(a: &EvalArgs) -> Result<(), CliError> {
    let views = a.views.count()?;
    let model = PredictorModel::<f32>::load(&a.weights)?;
    let split = match a.split {
        SplitArg::Train => Some(Split::Train),
        SplitArg::Test => Some(Split::Test),
        SplitArg::All => None,
    };
    let data = load_split(&a.manifest, &a.pools, split)?;
    let items: Vec<(&SnapshotPool, &TimeVector)> = data.iter().map(|(p, t)| (p, t)).collect();
    let (report, _) = evaluate(&model, &items, a.scenes_per_item, views, a.r_max, a.seed)?;
    println!("{}", report_json(&report));
    eprintln!(
        "{} items: MAE {:.3} ± {:.3} s, MAPE {:.2}%, SMAPE {:.2}%, F1 {:.3}",
        items.len(),
        report.mae,
        report.mae_std,
        report.mape,
        report.smape,
        report.f1
    );
    Ok(())
}

pub fn report_json(report: &EvalReport) -> String {
    serde_json::to_string(report).expect("report serialises")
}

#[derive(Debug, Serialize)]
struct Prediction<'a> {
    times: Vec<f32>,
    steps: &'a [&'a str],
    views_used: usize,
}

pub fn cmd_predict(a: &PredictArgs) -> Result<(), CliError> {
    let id = a.mesh.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let mesh = read_mesh_file(&a.mesh, &id)?;
    let model = PredictorModel::<f32>::load(&a.weights)?;
    let (unit, _) = normalize(&mesh)?;
    let sampler = a.camera.sampler(model.config.image_size);
    let spec = sampler.make_scene_spec_with(&id, &unit, a.seed, a.views)?;
    let views: Vec<_> = spec
        .poses
        .iter()
        .map(|pose| {
            let snap = render_quantized(&unit, pose, &sampler.intrinsics);
            (snapshot_to_tensor(&snap), pose_to_feature(pose, a.camera.r_max))
        })
        .collect();
    let times = model.predict_views(&views)?;
    let steps: &[&str] = if model.config.k == K { &STEP_NAMES } else { &[] };
    let out = Prediction { times, steps, views_used: views.len() };
    println!("{}", serde_json::to_string(&out).expect("prediction serialises"));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(args: &[&str]) -> Vec<OsString> {
        args.iter().map(OsString::from).collect()
    }

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn config_fills_missing_flags_only() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.toml");
        fs::write(&cfg, "seed = 5\nepochs = 7\npool_size = 3\n").unwrap();
        let args = os(&["techtime", "--config", cfg.to_str().unwrap(), "train", "--manifest", "m", "--pools", "p", "--out", "w", "--epochs", "9"]);
        let cli = Cli::try_parse_from(apply_config_file(args).unwrap()).unwrap();
        let Command::Train(t) = cli.command else { panic!("expected train") };
        assert_eq!(t.seed, 5);
        assert_eq!(t.epochs, 9);
        assert_eq!(t.batch, 16);
    }

    #[test]
    fn config_rejects_unknown_keys() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.toml");
        fs::write(&cfg, "sede = 5\n").unwrap();
        let err = apply_config_file(os(&["techtime", "generate", "--config", cfg.to_str().unwrap()])).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Usage("x".into()).exit_code(), 2);
        let exhausted = DatasetError::View(ViewError::SamplingExhausted { attempts: 3 }).for_item("a");
        assert_eq!(CliError::Dataset(exhausted).exit_code(), 3);
        assert_eq!(CliError::Model(ModelError::BadMagic).exit_code(), 1);
    }

    #[test]
    fn run_config_header_lines() {
        let run = RunConfig {
            manifest: "m.jsonl".into(),
            pools: "pools".into(),
            weights: "w.tpnn".into(),
            image_size: 64,
            pool_size: 100,
            views_min: 3,
            views_max: 5,
            r_max: 4.0,
            epochs: 10,
            batch: 16,
            lr: 1e-3,
            lr_decay_epoch: None,
            lr_decay: 0.1,
            seed: 1,
            aug: AugMode::Gqn,
            latent: 64,
            k: 6,
            steps: vec!["welding".into()],
            output_scale: vec![100.0],
        };
        let h = run.header();
        assert!(h.lines().all(|l| l.starts_with("# ") && l.contains('=')));
        assert!(h.contains("# aug=gqn\n"));
        assert!(h.contains("# lr_decay_epoch=none\n"));
        assert!(h.contains("# seed=1\n"));
    }
}
