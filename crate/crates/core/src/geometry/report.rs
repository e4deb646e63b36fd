use serde::{Deserialize, Serialize};

use super::decoder::DecoderConfig;
use super::metrics::{
    alignment_pair, ccgp, ccgp_by_holdout, decode_dichotomy, enumerate_dichotomies,
    parallelism_by_pairings, parallelism_score, usable_contexts,
};
use crate::error::{contract, Result};
use crate::linalg::{Matrix, Rng};
use crate::net::Network;
use crate::tasks::{sample_dataset, Phase, TaskSpec, DEFAULT_TEST_PER_CLUSTER};

/// Which metrics a report computes and with what budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReportOptions {
    pub test_per_cluster: usize,
    pub parallelism: bool,
    pub ccgp: bool,
    pub decoding: bool,
    /// Untrained dichotomies evaluated for large P.
    pub max_dichotomies: usize,
    /// Training contexts used per CCGP variable (all when `None`).
    pub max_contexts: Option<usize>,
    /// Pairings tried by pairing-based parallelism.
    pub max_pairings: usize,
    pub decoder: DecoderConfig,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            test_per_cluster: DEFAULT_TEST_PER_CLUSTER,
            parallelism: true,
            ccgp: true,
            decoding: true,
            max_dichotomies: 50,
            max_contexts: None,
            max_pairings: 120,
            decoder: DecoderConfig::default(),
        }
    }
}

impl ReportOptions {
    /// Kernel alignments only.
    pub fn alignment_only() -> Self {
        Self { parallelism: false, ccgp: false, decoding: false, ..Self::default() }
    }
}

/// Geometry of one hidden layer's representation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryReport {
    pub layer_index: usize,
    pub target_alignment: f64,
    pub input_alignment: f64,
    /// One value per label row; empty when not computed.
    pub parallelism: Vec<f64>,
    pub ccgp: Vec<f64>,
    pub trained_decoding: Option<f64>,
    pub untrained_decoding: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Names of the scalar metrics, in CSV column order.
pub const METRIC_NAMES: [&str; 6] = [
    "target_alignment",
    "input_alignment",
    "parallelism",
    "ccgp",
    "trained_decoding",
    "untrained_decoding",
];

fn mean(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        None
    } else {
        Some(v.iter().sum::<f64>() / v.len() as f64)
    }
}

impl GeometryReport {
    pub fn mean_parallelism(&self) -> Option<f64> {
        mean(&self.parallelism)
    }

    pub fn mean_ccgp(&self) -> Option<f64> {
        mean(&self.ccgp)
    }

    /// The six scalar metrics in [`METRIC_NAMES`] order (`None` = not computed).
    pub fn metrics(&self) -> [(&'static str, Option<f64>); 6] {
        [
            (METRIC_NAMES[0], Some(self.target_alignment)),
            (METRIC_NAMES[1], Some(self.input_alignment)),
            (METRIC_NAMES[2], self.mean_parallelism()),
            (METRIC_NAMES[3], self.mean_ccgp()),
            (METRIC_NAMES[4], self.trained_decoding),
            (METRIC_NAMES[5], self.untrained_decoding),
        ]
    }

    /// Checks every field against its declared range.
    pub fn check_ranges(&self) -> Result<()> {
        let within = |v: f64, lo: f64, hi: f64| v >= lo - 1e-9 && v <= hi + 1e-9;
        for (name, value) in [("target", self.target_alignment), ("input", self.input_alignment)] {
            if !within(value, 0.0, 1.0) {
                return Err(contract(format!("{name} alignment {value} outside [0, 1]")));
            }
        }
        if let Some(v) = self.parallelism.iter().find(|v| !within(**v, -1.0, 1.0)) {
            return Err(contract(format!("parallelism {v} outside [-1, 1]")));
        }
        let accs = self.ccgp.iter().copied().chain(self.trained_decoding).chain(self.untrained_decoding);
        for v in accs {
            if !within(v, 0.0, 1.0) {
                return Err(contract(format!("accuracy {v} outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub const CSV_HEADER: &'static str =
        "seed,activation,task,task_params,layer,target_alignment,input_alignment,parallelism,ccgp,trained_decoding,untrained_decoding";

    /// One CSV row in [`Self::CSV_HEADER`] order; missing metrics are empty.
    pub fn to_csv_row(&self, seed: u64, activation: &str, task: &str, task_params: &str) -> String {
        let mut cells = vec![
            seed.to_string(),
            csv_escape(activation),
            csv_escape(task),
            csv_escape(task_params),
            self.layer_index.to_string(),
        ];
        for (_, v) in self.metrics() {
            cells.push(v.map(|x| x.to_string()).unwrap_or_default());
        }
        cells.join(",")
    }
}

pub(crate) fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Mean representation per cluster: d × P.
fn cluster_means(z: &Matrix, clusters: &[usize], p: usize) -> Matrix {
    let mut sums = Matrix::zeros(z.rows(), p);
    let mut counts = vec![0usize; p];
    for (s, &c) in clusters.iter().enumerate() {
        counts[c] += 1;
        for r in 0..z.rows() {
            sums[(r, c)] += z[(r, s)];
        }
    }
    for c in 0..p {
        let n = counts[c].max(1) as f64;
        for r in 0..z.rows() {
            sums[(r, c)] /= n;
        }
    }
    sums
}

/// Every metric for hidden layer `layer` of `net`, measured on fresh test
/// samples drawn at the task's test noise.
pub fn full_report(
    net: &Network,
    task: &TaskSpec,
    layer: usize,
    rng: &mut Rng,
    opts: &ReportOptions,
) -> Result<GeometryReport> {
    if layer >= net.depth() {
        return Err(contract(format!("layer {layer} out of range for depth {}", net.depth())));
    }
    let data = sample_dataset(task, opts.test_per_cluster, Phase::Test, &mut rng.child(0))?;
    let pass = net.forward(&data.samples)?;
    let z = &pass.hidden[layer];
    let (target_alignment, input_alignment) = alignment_pair(z, &data.labels, &data.samples)?;
    let mut report = GeometryReport {
        layer_index: layer,
        target_alignment,
        input_alignment,
        parallelism: Vec::new(),
        ccgp: Vec::new(),
        trained_decoding: None,
        untrained_decoding: None,
        warnings: Vec::new(),
    };
    let p = task.n_clusters();
    let k = task.n_outputs();
    let decoder = DecoderConfig { seed: rng.child(1).seed(), ..opts.decoder.clone() };

    if opts.parallelism {
        let means = cluster_means(z, &data.cluster_id, p);
        for i in 0..k {
            let scored = if usable_contexts(&task.labels, i) >= 2 {
                parallelism_score(&means, &task.labels, i)?
            } else {
                parallelism_by_pairings(&means, task.labels.row(i), opts.max_pairings, &mut rng.child(10 + i as u64))?
            };
            report.warnings.extend(scored.warnings);
            report.parallelism.push(scored.value);
        }
    }

    if opts.ccgp {
        for i in 0..k {
            let scored = if usable_contexts(&task.labels, i) >= 2 {
                ccgp(z, &data.labels, i, &decoder, opts.max_contexts)?
            } else {
                let cap = opts.max_contexts.unwrap_or(usize::MAX);
                ccgp_by_holdout(z, &data.cluster_id, task.labels.row(i), &decoder, cap, &mut rng.child(20 + i as u64))?
            };
            report.warnings.extend(scored.warnings);
            report.ccgp.push(scored.value);
        }
    }

    if opts.decoding {
        // First half of each cluster's samples fits the decoder, the second half scores it.
        let half = opts.test_per_cluster / 2;
        if half == 0 {
            return Err(contract("decoding needs at least 2 test samples per cluster"));
        }
        let (fit_idx, eval_idx): (Vec<usize>, Vec<usize>) =
            (0..data.len()).partition(|&s| s % opts.test_per_cluster < half);
        let z_fit = z.select_cols(&fit_idx);
        let z_eval = z.select_cols(&eval_idx);
        let c_fit: Vec<usize> = fit_idx.iter().map(|&s| data.cluster_id[s]).collect();
        let c_eval: Vec<usize> = eval_idx.iter().map(|&s| data.cluster_id[s]).collect();
        let dichotomies = enumerate_dichotomies(task, opts.max_dichotomies, &mut rng.child(2))?;
        let (mut trained, mut untrained) = (Vec::new(), Vec::new());
        for d in &dichotomies {
            let acc = decode_dichotomy(&z_fit, &c_fit, &z_eval, &c_eval, d, &decoder)?;
            if d.trained {
                trained.push(acc);
            } else {
                untrained.push(acc);
            }
        }
        report.trained_decoding = mean(&trained);
        report.untrained_decoding = mean(&untrained);
    }
    report.check_ranges()?;
    Ok(report)
}
