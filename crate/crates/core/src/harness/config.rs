use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ReportOptions;
use crate::net::{ActivationKind, ReadoutMode, TrainConfig, DEFAULT_HIDDEN_WIDTH};
use crate::tasks::DEFAULT_INPUT_DIM;

/// Config schema understood by this build.
pub const SCHEMA_VERSION: u32 = 1;

/// Experiment tag with its sweep parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum Experiment {
    /// Four unstructured clusters, one binary output.
    Fig1,
    /// δ-separable XOR over a list of δ.
    Fig2Delta { deltas: Vec<f64> },
    /// δ-separable XOR over training noise levels.
    Fig3Noise { deltas: Vec<f64>, sigmas: Vec<f64> },
    /// Random tasks of controlled input-output alignment.
    Fig4Aligned {
        clusters: Vec<usize>,
        outputs: Vec<usize>,
        alignments: Vec<f64>,
        /// Max-dimensional line kernels (true) and/or sampled kernels (false).
        max_dim: Vec<bool>,
    },
    /// Deep networks on the easy and hard tasks.
    Fig5Multilayer { depths: Vec<usize>, tasks: Vec<DeepTask> },
    /// Activation perturbations on aligned tasks.
    Fig6Perturb { clusters: usize, outputs: usize, alignments: Vec<f64> },
    /// Four clusters, two outputs, eight readout groups.
    #[serde(rename = "appA_multiout")]
    AppAMultiout,
    /// Four clusters under each readout mode.
    #[serde(rename = "appB_readouts")]
    AppBReadouts { readouts: Vec<ReadoutMode> },
    /// Region transitions of first-layer weights under training noise.
    #[serde(rename = "appE_regions")]
    AppERegions { delta: f64, sigmas: Vec<f64> },
}

impl Experiment {
    pub fn tag(&self) -> &'static str {
        match self {
            Experiment::Fig1 => "fig1",
            Experiment::Fig2Delta { .. } => "fig2_delta",
            Experiment::Fig3Noise { .. } => "fig3_noise",
            Experiment::Fig4Aligned { .. } => "fig4_aligned",
            Experiment::Fig5Multilayer { .. } => "fig5_multilayer",
            Experiment::Fig6Perturb { .. } => "fig6_perturb",
            Experiment::AppAMultiout => "appA_multiout",
            Experiment::AppBReadouts { .. } => "appB_readouts",
            Experiment::AppERegions { .. } => "appE_regions",
        }
    }

    /// Coordinate plotted on the horizontal axis.
    pub fn x_key(&self) -> &'static str {
        match self {
            Experiment::Fig1 | Experiment::AppAMultiout | Experiment::AppBReadouts { .. } => "epoch",
            Experiment::Fig2Delta { .. } => "delta",
            Experiment::Fig3Noise { .. } | Experiment::AppERegions { .. } => "sigma",
            Experiment::Fig4Aligned { .. } | Experiment::Fig6Perturb { .. } => "alignment",
            Experiment::Fig5Multilayer { .. } => "layer",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeepTask {
    Easy,
    Hard,
}

impl fmt::Display for DeepTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DeepTask::Easy => "easy",
            DeepTask::Hard => "hard",
        })
    }
}

/// A declarative sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(flatten)]
    pub experiment: Experiment,
    pub seeds: Vec<u64>,
    #[serde(default = "default_activations")]
    pub activations: Vec<ActivationKind>,
    /// Width of every hidden layer.
    #[serde(default = "default_width")]
    pub hidden_width: usize,
    /// Readout used unless the experiment sweeps it (defaults per experiment).
    #[serde(default)]
    pub readout: Option<ReadoutMode>,
    #[serde(default = "default_input_dim")]
    pub input_dim: usize,
    #[serde(default = "default_sigma")]
    pub sigma_train: f64,
    /// Training hyperparameters; `seed` is replaced per run.
    #[serde(default)]
    pub train: Option<TrainConfig>,
    #[serde(default)]
    pub report: ReportOptions,
    /// Epochs at which metrics are measured; empty means after training only.
    #[serde(default)]
    pub eval_epochs: Vec<usize>,
    /// Record weight trajectories and vector fields for the first seed.
    #[serde(default)]
    pub dynamics: bool,
    /// Training steps between recorded weight snapshots.
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default = "default_true")]
    pub checkpoints: bool,
    /// Default output directory, overridden by `--out`.
    #[serde(default)]
    pub out: Option<String>,
}

fn default_activations() -> Vec<ActivationKind> {
    vec![ActivationKind::Tanh, ActivationKind::Relu]
}
fn default_width() -> usize {
    DEFAULT_HIDDEN_WIDTH
}
fn default_input_dim() -> usize {
    DEFAULT_INPUT_DIM
}
fn default_sigma() -> f64 {
    1.0
}
fn default_record_every() -> usize {
    4
}
fn default_true() -> bool {
    true
}

/// One problem found by [`ExperimentConfig::violations`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl ExperimentConfig {
    /// A config with the defaults used to reproduce each experiment.
    pub fn preset(experiment: Experiment, seeds: Vec<u64>) -> Self {
        let mut cfg = Self {
            schema_version: SCHEMA_VERSION,
            experiment,
            seeds,
            activations: default_activations(),
            hidden_width: DEFAULT_HIDDEN_WIDTH,
            readout: None,
            input_dim: DEFAULT_INPUT_DIM,
            sigma_train: 1.0,
            train: None,
            report: ReportOptions::default(),
            eval_epochs: Vec::new(),
            dynamics: false,
            record_every: default_record_every(),
            checkpoints: true,
            out: None,
        };
        match &cfg.experiment {
            Experiment::Fig1 | Experiment::Fig2Delta { .. } | Experiment::Fig3Noise { .. } | Experiment::AppERegions { .. } => {
                cfg.hidden_width = SMALL_NET_WIDTH;
                cfg.train = Some(small_net_training());
            }
            Experiment::AppAMultiout | Experiment::AppBReadouts { .. } => {
                cfg.hidden_width = 8 * 4;
                cfg.train = Some(small_net_training());
            }
            Experiment::Fig6Perturb { .. } => {
                cfg.activations = vec![ActivationKind::Tanh, ActivationKind::Relu, ActivationKind::SaturatingRelu]
                    .into_iter()
                    .chain(crate::net::SHIFTED_RELU_OFFSETS.iter().map(|&b| ActivationKind::ShiftedRelu { b }))
                    .collect();
            }
            Experiment::Fig4Aligned { .. } | Experiment::Fig5Multilayer { .. } => {}
        }
        cfg
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            Error::Config(format!("line {} column {}: {e}", e.line(), e.column()))
        })
    }

    /// Reads a config; parse errors carry `path:line:column`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| {
            Error::Config(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column()))
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Hidden layer widths for a run at `depth`.
    pub fn hidden(&self, depth: usize) -> Vec<usize> {
        vec![self.hidden_width; depth]
    }

    /// Readout mode for a run with `k` outputs and `depth` hidden layers.
    pub fn readout_for(&self, k: usize, depth: usize) -> ReadoutMode {
        self.readout.unwrap_or(if k <= 2 && depth == 1 { ReadoutMode::FrozenDiscrete } else { ReadoutMode::FrozenRandom })
    }

    /// Training settings for a run at `depth`.
    pub fn training(&self, depth: usize) -> TrainConfig {
        self.train.clone().unwrap_or_else(|| if depth > 1 { TrainConfig::deep() } else { TrainConfig::default() })
    }

    /// Schema and feasibility problems; empty when the config can run.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut bad = |field: &str, message: String| out.push(Violation { field: field.into(), message });
        if self.schema_version != SCHEMA_VERSION {
            bad("schema_version", format!("expected {SCHEMA_VERSION}, found {}", self.schema_version));
        }
        if self.seeds.is_empty() {
            bad("seeds", "at least one seed is required".into());
        }
        if self.activations.is_empty() {
            bad("activations", "at least one activation is required".into());
        }
        if self.hidden_width == 0 {
            bad("hidden_width", "must be positive".into());
        }
        if self.input_dim < 3 {
            bad("input_dim", "must be at least 3".into());
        }
        if !(self.sigma_train >= 0.0 && self.sigma_train.is_finite()) {
            bad("sigma_train", "must be finite and non-negative".into());
        }
        if let Err(e) = self.training(1).validate() {
            bad("train", e.to_string());
        }
        if self.report.test_per_cluster < 2 {
            bad("report.test_per_cluster", "must be at least 2".into());
        }
        if self.dynamics && self.record_every == 0 {
            bad("record_every", "must be positive when dynamics are recorded".into());
        }
        let unit = |v: &f64| (0.0..=1.0).contains(v);
        let nonneg = |v: &f64| *v >= 0.0 && v.is_finite();
        match &self.experiment {
            Experiment::Fig1 => self.check_groups(1, &mut bad),
            Experiment::AppAMultiout => self.check_groups(2, &mut bad),
            Experiment::AppBReadouts { readouts } => {
                if readouts.is_empty() {
                    bad("readouts", "at least one readout mode is required".into());
                }
                if readouts.contains(&ReadoutMode::FrozenDiscrete) {
                    self.check_groups(1, &mut bad);
                }
            }
            Experiment::Fig2Delta { deltas } => {
                if deltas.is_empty() || !deltas.iter().all(unit) {
                    bad("deltas", "a non-empty list of values in [0, 1] is required".into());
                }
                self.check_groups(1, &mut bad);
            }
            Experiment::Fig3Noise { deltas, sigmas } => {
                if deltas.is_empty() || !deltas.iter().all(unit) {
                    bad("deltas", "a non-empty list of values in [0, 1] is required".into());
                }
                if sigmas.is_empty() || !sigmas.iter().all(nonneg) {
                    bad("sigmas", "a non-empty list of non-negative values is required".into());
                }
                self.check_groups(1, &mut bad);
            }
            Experiment::AppERegions { delta, sigmas } => {
                if !unit(delta) {
                    bad("delta", "must lie in [0, 1]".into());
                }
                if sigmas.is_empty() || !sigmas.iter().all(nonneg) {
                    bad("sigmas", "a non-empty list of non-negative values is required".into());
                }
                if !self.dynamics {
                    bad("dynamics", "region classification needs dynamics = true".into());
                }
                self.check_groups(1, &mut bad);
            }
            Experiment::Fig4Aligned { clusters, outputs, alignments, max_dim } => {
                if clusters.is_empty() || outputs.is_empty() || alignments.is_empty() || max_dim.is_empty() {
                    bad("experiment", "clusters, outputs, alignments and max_dim must be non-empty".into());
                }
                for &p in clusters {
                    for &k in outputs {
                        check_aligned(p, k, &mut bad);
                        self.check_groups(k, &mut bad);
                    }
                }
                if !alignments.iter().all(unit) {
                    bad("alignments", "values must lie in [0, 1]".into());
                }
            }
            Experiment::Fig6Perturb { clusters, outputs, alignments } => {
                check_aligned(*clusters, *outputs, &mut bad);
                self.check_groups(*outputs, &mut bad);
                if alignments.is_empty() || !alignments.iter().all(unit) {
                    bad("alignments", "a non-empty list of values in [0, 1] is required".into());
                }
            }
            Experiment::Fig5Multilayer { depths, tasks } => {
                if depths.is_empty() || depths.contains(&0) {
                    bad("depths", "a non-empty list of positive depths is required".into());
                }
                if tasks.is_empty() {
                    bad("tasks", "at least one of easy/hard is required".into());
                }
                if self.readout == Some(ReadoutMode::FrozenDiscrete) {
                    self.check_groups(5, &mut bad);
                }
            }
        }
        out
    }

    /// Frozen discrete readouts split the last hidden layer into 3ᵏ − 1 equal groups.
    fn check_groups(&self, k: usize, bad: &mut impl FnMut(&str, String)) {
        if self.readout_for(k, 1) != ReadoutMode::FrozenDiscrete {
            return;
        }
        let groups = 3usize.pow(k as u32) - 1;
        if self.hidden_width % groups != 0 {
            bad(
                "hidden_width",
                format!("{} is not divisible by the {groups} readout groups of a {k}-output task", self.hidden_width),
            );
        }
    }
}

fn check_aligned(p: usize, k: usize, bad: &mut impl FnMut(&str, String)) {
    if p < 4 || p % 2 != 0 {
        bad("clusters", format!("P = {p} must be even and at least 4"));
    }
    if k == 0 || k + 1 >= p {
        bad("outputs", format!("k = {k} is infeasible for P = {p}: need 0 < k < P - 1"));
    }
}

/// Hidden width of the single-layer networks in the four-cluster experiments.
pub const SMALL_NET_WIDTH: usize = 8;

/// Training for the four-cluster experiments: run close to zero loss.
pub fn small_net_training() -> TrainConfig {
    TrainConfig { convergence_loss: 1e-3, ..TrainConfig::default() }
}
