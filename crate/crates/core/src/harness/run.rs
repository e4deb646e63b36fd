use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::config::{DeepTask, Experiment, ExperimentConfig};
use crate::dynamics::{
    classify_regions, cluster_alignment_curves, project_trajectory, vector_field, AlignmentCurves, GridSpec,
    RegionTransition, TrajectoryLog, VectorField,
};
use crate::error::{Error, Result};
use crate::geometry::{full_report, GeometryReport};
use crate::linalg::Rng;
use crate::net::{
    init_network, train_with_hook, ActivationKind, Network, ReadoutMode, TrainingSummary, WeightRecorder,
    DEFAULT_ERROR_MAGNITUDE,
};
use crate::tasks::{
    aligned_task, class_axes, delta_xor_task, easy_task, hard_task, two_output_task, unstructured_task, TaskSpec,
};

/// A sweep coordinate value.
#[derive(Clone, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coord {
    Num(f64),
    Text(String),
}

impl Coord {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Coord::Num(v) => Some(*v),
            Coord::Text(_) => None,
        }
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coord::Num(v) => write!(f, "{v}"),
            Coord::Text(s) => f.write_str(s),
        }
    }
}

impl From<f64> for Coord {
    fn from(v: f64) -> Self {
        Coord::Num(v)
    }
}

impl From<usize> for Coord {
    fn from(v: usize) -> Self {
        Coord::Num(v as f64)
    }
}

impl From<&str> for Coord {
    fn from(v: &str) -> Self {
        Coord::Text(v.to_string())
    }
}

pub type Coords = BTreeMap<String, Coord>;

/// How a run builds its task.
#[derive(Clone, Debug, PartialEq)]
enum Recipe {
    Unstructured,
    DeltaXor(f64),
    Aligned { p: usize, k: usize, c: f64, max_dim: bool },
    TwoOutput,
    Deep(DeepTask),
}

/// One task setting of a sweep, shared by all activations and seeds.
#[derive(Clone, Debug)]
struct TaskPoint {
    coords: Coords,
    recipe: Recipe,
    sigma: f64,
    depth: usize,
    readout: Option<ReadoutMode>,
}

/// One (task point, activation, seed) unit of work.
#[derive(Clone, Debug)]
pub struct RunSpec {
    pub index: usize,
    pub id: String,
    pub coords: Coords,
    pub activation: ActivationKind,
    pub seed: u64,
    /// Position of the seed in the config's seed list.
    pub seed_rank: usize,
    point: usize,
    recipe: Recipe,
    sigma: f64,
    depth: usize,
    readout: ReadoutMode,
}

/// A measured value of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub coords: Coords,
    pub metric: String,
    pub value: f64,
}

/// Weight-space artifacts of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicsArtifact {
    pub id: String,
    pub activation: String,
    pub coords: Coords,
    pub trajectory: Option<TrajectoryLog>,
    pub fields: Vec<VectorField>,
    pub regions: Vec<RegionTransition>,
    pub alignment: Option<AlignmentCurves>,
}

/// Everything one run produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub id: String,
    pub coords: Coords,
    pub activation: String,
    pub seed: u64,
    pub samples: Vec<Sample>,
    pub summary: Option<TrainingSummary>,
    pub error: Option<String>,
    #[serde(skip)]
    pub dynamics: Option<DynamicsArtifact>,
    #[serde(skip)]
    pub checkpoint: Option<String>,
}

/// Saved network with enough context to recompute its geometry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub id: String,
    pub experiment: String,
    pub coords: Coords,
    pub activation: ActivationKind,
    pub seed: u64,
    pub task: TaskSpec,
    pub network: Network,
    pub summary: TrainingSummary,
}

fn task_points(cfg: &ExperimentConfig) -> Vec<TaskPoint> {
    let base = |coords: Coords, recipe: Recipe| TaskPoint { coords, recipe, sigma: cfg.sigma_train, depth: 1, readout: None };
    let coords = |pairs: Vec<(&str, Coord)>| pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect::<Coords>();
    match &cfg.experiment {
        Experiment::Fig1 => vec![base(Coords::new(), Recipe::Unstructured)],
        Experiment::AppAMultiout => vec![base(Coords::new(), Recipe::TwoOutput)],
        Experiment::Fig2Delta { deltas } => {
            deltas.iter().map(|&d| base(coords(vec![("delta", d.into())]), Recipe::DeltaXor(d))).collect()
        }
        Experiment::Fig3Noise { deltas, sigmas } => deltas
            .iter()
            .flat_map(|&d| {
                sigmas.iter().map(move |&s| TaskPoint {
                    sigma: s,
                    ..base(coords(vec![("delta", d.into()), ("sigma", s.into())]), Recipe::DeltaXor(d))
                })
            })
            .collect(),
        Experiment::AppERegions { delta, sigmas } => sigmas
            .iter()
            .map(|&s| TaskPoint { sigma: s, ..base(coords(vec![("sigma", s.into())]), Recipe::DeltaXor(*delta)) })
            .collect(),
        Experiment::Fig4Aligned { clusters, outputs, alignments, max_dim } => {
            let mut out = Vec::new();
            for &p in clusters {
                for &k in outputs {
                    for &m in max_dim {
                        for &c in alignments {
                            let geometry = if m { "max_dim" } else { "sampled" };
                            out.push(base(
                                coords(vec![
                                    ("clusters", p.into()),
                                    ("outputs", k.into()),
                                    ("geometry", geometry.into()),
                                    ("alignment", c.into()),
                                ]),
                                Recipe::Aligned { p, k, c, max_dim: m },
                            ));
                        }
                    }
                }
            }
            out
        }
        Experiment::Fig6Perturb { clusters, outputs, alignments } => alignments
            .iter()
            .map(|&c| {
                base(
                    coords(vec![("alignment", c.into())]),
                    Recipe::Aligned { p: *clusters, k: *outputs, c, max_dim: true },
                )
            })
            .collect(),
        Experiment::Fig5Multilayer { depths, tasks } => tasks
            .iter()
            .flat_map(|&t| {
                depths.iter().map(move |&d| TaskPoint {
                    depth: d,
                    ..base(coords(vec![("task", t.to_string().as_str().into()), ("depth", d.into())]), Recipe::Deep(t))
                })
            })
            .collect(),
        Experiment::AppBReadouts { readouts } => readouts
            .iter()
            .map(|&r| TaskPoint {
                readout: Some(r),
                ..base(coords(vec![("readout", readout_name(r).into())]), Recipe::Unstructured)
            })
            .collect(),
    }
}

pub fn readout_name(r: ReadoutMode) -> &'static str {
    match r {
        ReadoutMode::FrozenDiscrete => "frozen_discrete",
        ReadoutMode::FrozenRandom => "frozen_random",
        ReadoutMode::Trainable => "trainable",
    }
}

fn recipe_outputs(r: &Recipe) -> usize {
    match r {
        Recipe::Unstructured | Recipe::DeltaXor(_) => 1,
        Recipe::TwoOutput => 2,
        Recipe::Aligned { k, .. } => *k,
        Recipe::Deep(_) => 5,
    }
}

fn file_safe(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' }).collect()
}

/// Every run of a config in canonical order (task point, activation, seed).
pub fn expand(cfg: &ExperimentConfig, seed_offset: u64) -> Vec<RunSpec> {
    let mut out = Vec::new();
    for (point, tp) in task_points(cfg).into_iter().enumerate() {
        let k = recipe_outputs(&tp.recipe);
        let readout = tp.readout.unwrap_or_else(|| cfg.readout_for(k, tp.depth));
        for &activation in &cfg.activations {
            for (seed_rank, &s) in cfg.seeds.iter().enumerate() {
                let seed = s.wrapping_add(seed_offset);
                let index = out.len();
                let id = format!(
                    "{}-p{point:03}-{}-s{seed}",
                    cfg.experiment.tag(),
                    file_safe(&activation.label())
                );
                out.push(RunSpec {
                    index,
                    id,
                    coords: tp.coords.clone(),
                    activation,
                    seed,
                    seed_rank,
                    point,
                    recipe: tp.recipe.clone(),
                    sigma: tp.sigma,
                    depth: tp.depth,
                    readout,
                });
            }
        }
    }
    out
}

fn build_task(spec: &RunSpec, n: usize, rng: &mut Rng) -> Result<TaskSpec> {
    let task = match &spec.recipe {
        Recipe::Unstructured => unstructured_task(4, n, rng)?,
        Recipe::DeltaXor(d) => delta_xor_task(*d, n, rng)?,
        Recipe::Aligned { p, k, c, max_dim } => aligned_task(*p, *k, *c, n, *max_dim, rng)?,
        Recipe::TwoOutput => two_output_task(n, rng)?,
        Recipe::Deep(DeepTask::Easy) => easy_task(n, rng)?,
        Recipe::Deep(DeepTask::Hard) => hard_task(n, rng)?,
    };
    Ok(task.with_sigma_train(spec.sigma))
}

fn report_samples(report: &GeometryReport, coords: &Coords, out: &mut Vec<Sample>) {
    for (name, value) in report.metrics() {
        if let Some(value) = value {
            out.push(Sample { coords: coords.clone(), metric: name.to_string(), value });
        }
    }
}

/// Trains one network and measures it.
pub fn execute(cfg: &ExperimentConfig, spec: &RunSpec) -> RunRecord {
    let mut record = RunRecord {
        id: spec.id.clone(),
        coords: spec.coords.clone(),
        activation: spec.activation.label(),
        seed: spec.seed,
        samples: Vec::new(),
        summary: None,
        error: None,
        dynamics: None,
        checkpoint: None,
    };
    if let Err(e) = execute_inner(cfg, spec, &mut record) {
        record.samples.clear();
        record.error = Some(e.to_string());
    }
    record
}

fn execute_inner(cfg: &ExperimentConfig, spec: &RunSpec, record: &mut RunRecord) -> Result<()> {
    // Streams depend on the seed and task point only, so every activation
    // sees the same task, initial weights and data order.
    let base = Rng::new(spec.seed);
    let point = spec.point as u64;
    let task = build_task(spec, cfg.input_dim, &mut base.child(1_000 + point))?;
    let hidden = cfg.hidden(spec.depth);
    let mut net = init_network(&task, &hidden, spec.activation, spec.readout, &mut base.child(2_000 + point))?;
    let initial_first = net.first_layer().weights.clone();
    let mut train_cfg = cfg.training(spec.depth);
    train_cfg.seed = base.child(3_000 + point).seed();
    let report_seed = base.child(4_000 + point).seed();

    let record_dynamics = cfg.dynamics && spec.seed_rank == 0 && spec.depth == 1;
    let mut recorder = record_dynamics.then(|| WeightRecorder::new(cfg.record_every));

    let measure = |net: &Network, epoch: Option<usize>, out: &mut Vec<Sample>| -> Result<()> {
        for layer in 0..net.depth() {
            let mut coords = spec.coords.clone();
            coords.insert("layer".into(), layer.into());
            if let Some(e) = epoch {
                coords.insert("epoch".into(), e.into());
            }
            let report = full_report(net, &task, layer, &mut Rng::new(report_seed), &cfg.report)?;
            report_samples(&report, &coords, out);
        }
        Ok(())
    };

    let mut samples = Vec::new();
    let mut pending: Vec<usize> = cfg.eval_epochs.clone();
    pending.sort_unstable();
    pending.dedup();
    let summary = train_with_hook(&mut net, &task, &train_cfg, recorder.as_mut(), |epoch, net| {
        while pending.first() == Some(&epoch) {
            pending.remove(0);
            measure(net, Some(epoch), &mut samples)?;
        }
        Ok(())
    })?;
    // Epochs after convergence see the final network.
    for &epoch in &pending {
        measure(&net, Some(epoch), &mut samples)?;
    }
    if cfg.eval_epochs.is_empty() {
        measure(&net, None, &mut samples)?;
    }

    let single_output = task.n_outputs() == 1;
    let mut dynamics = None;
    if single_output && spec.depth == 1 {
        let axes = class_axes(&task)?;
        let signs = net.readout.row(0).to_vec();
        let regions = classify_regions(&initial_first, &net.first_layer().weights, &axes, &signs)?;
        let mut coords = spec.coords.clone();
        coords.insert("layer".into(), 0usize.into());
        if let Some(&last) = cfg.eval_epochs.iter().max() {
            coords.insert("epoch".into(), last.into());
        }
        let inter_final = regions.iter().filter(|r| r.final_region.is_inter()).count();
        samples.push(Sample {
            coords: coords.clone(),
            metric: "inter_dominant_fraction".into(),
            value: inter_final as f64 / regions.len() as f64,
        });
        let intra_start: Vec<&RegionTransition> = regions.iter().filter(|r| !r.initial.is_inter()).collect();
        if !intra_start.is_empty() {
            let moved = intra_start.iter().filter(|r| r.final_region.is_inter()).count();
            samples.push(Sample {
                coords,
                metric: "intra_to_inter_fraction".into(),
                value: moved as f64 / intra_start.len() as f64,
            });
        }
        if let Some(rec) = &recorder {
            let trajectory = project_trajectory(&rec.snapshots, &axes, &signs)?;
            let fields = [1.0, -1.0]
                .iter()
                .map(|&w_o| vector_field(&task, &axes, spec.activation, w_o, &GridSpec::default(), DEFAULT_ERROR_MAGNITUDE))
                .collect::<Result<Vec<_>>>()?;
            dynamics = Some(DynamicsArtifact {
                id: spec.id.clone(),
                activation: spec.activation.label(),
                coords: spec.coords.clone(),
                trajectory: Some(trajectory),
                fields,
                regions,
                alignment: None,
            });
        }
    } else if let Some(rec) = &recorder {
        if net.readout_mode == ReadoutMode::FrozenDiscrete {
            let (groups, assignment) = net.readout_groups();
            let curves = cluster_alignment_curves(&rec.snapshots, &task, &groups, &assignment)?;
            dynamics = Some(DynamicsArtifact {
                id: spec.id.clone(),
                activation: spec.activation.label(),
                coords: spec.coords.clone(),
                trajectory: None,
                fields: Vec::new(),
                regions: Vec::new(),
                alignment: Some(curves),
            });
        }
    }

    if samples.iter().any(|s| !s.value.is_finite()) {
        return Err(Error::UndefinedMetric("non-finite metric value".into()));
    }
    if cfg.checkpoints {
        let ckpt = Checkpoint {
            id: spec.id.clone(),
            experiment: cfg.experiment.tag().into(),
            coords: spec.coords.clone(),
            activation: spec.activation,
            seed: spec.seed,
            task,
            network: net,
            summary: summary.clone(),
        };
        record.checkpoint = Some(serde_json::to_string(&ckpt)?);
    }
    record.samples = samples;
    record.summary = Some(summary);
    record.dynamics = dynamics;
    Ok(())
}

/// Runs every spec on `workers` threads with a static round-robin partition;
/// records come back in spec order regardless of scheduling.
pub fn execute_all(cfg: &ExperimentConfig, specs: &[RunSpec], workers: usize) -> Vec<RunRecord> {
    let workers = workers.clamp(1, specs.len().max(1));
    if workers == 1 {
        return specs.iter().map(|s| execute(cfg, s)).collect();
    }
    let mut slots: Vec<Option<RunRecord>> = vec![None; specs.len()];
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope.spawn(move || {
                    specs.iter().enumerate().skip(w).step_by(workers).map(|(i, s)| (i, execute(cfg, s))).collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, rec) in h.join().expect("worker thread panicked") {
                slots[i] = Some(rec);
            }
        }
    });
    slots.into_iter().map(|r| r.expect("every run executed")).collect()
}
