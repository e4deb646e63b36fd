//! Weight-space analysis of single-hidden-layer networks: neuron trajectories
//! in the (inter, intra) plane, expected-update vector fields, cluster
//! alignment curves and region classification.

use std::fmt;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};
use crate::linalg::{axpy, dot, norm, Matrix, Rng};
use crate::net::{expected_update, init_network, ActivationKind, ReadoutMode, WeightSnapshot};
use crate::tasks::{Axes, TaskSpec};

/// One projected weight state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub step: usize,
    pub inter: f64,
    pub intra: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeuronTrajectory {
    pub neuron: usize,
    /// Readout sign of the neuron's group.
    pub group: f64,
    pub points: Vec<TrajectoryPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLog {
    pub neurons: Vec<NeuronTrajectory>,
    /// Inter axis was degenerate; every `inter` projection is zero.
    pub degenerate: bool,
}

/// Projection of `w` onto the inter axis and the intra axis for readout sign `w_o`.
pub fn project(w: &[f64], axes: &Axes, w_o: f64) -> (f64, f64) {
    let inter = if axes.degenerate { 0.0 } else { dot(w, &axes.inter) };
    (inter, dot(w, axes.intra_for_readout(w_o)))
}

/// Projects recorded first-layer weights of every neuron onto the class axes.
/// `readout_signs` holds each neuron's readout weight (single-output nets).
pub fn project_trajectory(snapshots: &[WeightSnapshot], axes: &Axes, readout_signs: &[f64]) -> Result<TrajectoryLog> {
    let first = snapshots.first().ok_or_else(|| contract("no snapshots to project"))?;
    let h = first.weights.rows();
    if readout_signs.len() != h {
        return Err(contract(format!("{} readout signs for {h} neurons", readout_signs.len())));
    }
    if snapshots.windows(2).any(|w| w[1].step <= w[0].step) {
        return Err(contract("snapshot steps must be strictly increasing"));
    }
    let neurons = (0..h)
        .map(|j| NeuronTrajectory {
            neuron: j,
            group: readout_signs[j].signum(),
            points: snapshots
                .iter()
                .map(|s| {
                    let (inter, intra) = project(s.weights.row(j), axes, readout_signs[j]);
                    TrajectoryPoint { step: s.step, inter, intra }
                })
                .collect(),
        })
        .collect();
    Ok(TrajectoryLog { neurons, degenerate: axes.degenerate })
}

impl TrajectoryLog {
    pub const CSV_HEADER: &'static str = "neuron,group,step,inter,intra";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for n in &self.neurons {
            for p in &n.points {
                let _ = writeln!(out, "{},{},{},{},{}", n.neuron, n.group, p.step, p.inter, p.intra);
            }
        }
        out
    }
}

/// A square grid in axis units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { min: -3.0, max: 3.0, points: 21 }
    }
}

impl GridSpec {
    pub fn coords(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        let step = (self.max - self.min) / (self.points - 1) as f64;
        (0..self.points).map(|i| self.min + step * i as f64).collect()
    }

    fn validate(&self) -> Result<()> {
        if self.points == 0 || !self.min.is_finite() || !self.max.is_finite() || self.max < self.min {
            return Err(contract(format!("invalid grid {self:?}")));
        }
        Ok(())
    }
}

/// Which plane a vector field lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Plane {
    /// (inter axis, intra axis matched to the readout sign).
    InterIntra,
    /// Both intra axes, used when the inter axis is degenerate.
    IntraPair,
}

/// Expected update projected onto a plane, on a rectangular grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VectorField {
    pub kind: ActivationKind,
    pub w_o: f64,
    pub plane: Plane,
    /// Horizontal coordinates (inter axis, or the first intra axis).
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// Row-major over (y, x): `vectors[iy * xs.len() + ix]`.
    pub vectors: Vec<[f64; 2]>,
}

impl VectorField {
    pub fn at(&self, ix: usize, iy: usize) -> [f64; 2] {
        self.vectors[iy * self.xs.len() + ix]
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub const CSV_HEADER: &'static str = "ix,iy,x,y,dx,dy";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for (iy, y) in self.ys.iter().enumerate() {
            for (ix, x) in self.xs.iter().enumerate() {
                let [dx, dy] = self.at(ix, iy);
                let _ = writeln!(out, "{ix},{iy},{x},{y},{dx},{dy}");
            }
        }
        out
    }
}

/// The two unit axes spanning the field's plane.
pub fn field_plane(axes: &Axes, w_o: f64) -> Result<(Plane, Vec<f64>, Vec<f64>)> {
    if axes.degenerate {
        if axes.intra.len() < 2 {
            return Err(contract("degenerate inter axis and fewer than two intra axes"));
        }
        Ok((Plane::IntraPair, axes.intra[0].clone(), axes.intra[1].clone()))
    } else {
        Ok((Plane::InterIntra, axes.inter.clone(), axes.intra_for_readout(w_o).to_vec()))
    }
}

/// Expected update at w = a·u + b·v projected back onto (u, v).
fn field_vector(task: &TaskSpec, kind: ActivationKind, w_o: f64, u: &[f64], v: &[f64], a: f64, b: f64, eps: &[f64]) -> Result<[f64; 2]> {
    let mut w = vec![0.0; u.len()];
    axpy(a, u, &mut w);
    axpy(b, v, &mut w);
    let dw = expected_update(&w, 0.0, kind, w_o, task, Some(eps))?;
    Ok([dot(&dw, u), dot(&dw, v)])
}

/// Expected first-layer update over a grid in the class-axis plane.
pub fn vector_field(
    task: &TaskSpec,
    axes: &Axes,
    kind: ActivationKind,
    w_o: f64,
    grid: &GridSpec,
    eps_magnitude: f64,
) -> Result<VectorField> {
    grid.validate()?;
    let (plane, u, v) = field_plane(axes, w_o)?;
    let eps: Vec<f64> = task.labels.row(0).iter().map(|&y| eps_magnitude * w_o * y).collect();
    let xs = grid.coords();
    let ys = grid.coords();
    let mut vectors = Vec::with_capacity(xs.len() * ys.len());
    for &b in &ys {
        for &a in &xs {
            let vec = field_vector(task, kind, w_o, &u, &v, a, b, &eps)?;
            if !vec.iter().all(|c| c.is_finite()) {
                return Err(contract(format!("non-finite field vector at ({a}, {b})")));
            }
            vectors.push(vec);
        }
    }
    Ok(VectorField { kind, w_o, plane, xs, ys, vectors })
}

/// Mean update of one hidden neuron under actual backprop, estimated by
/// sampling noiseless cluster centers.
///
/// The neuron is paired with a twin of identical input weights and opposite
/// readout, which pins the network output at ½ so every cluster's error has
/// the same magnitude; the result is therefore proportional to the expected
/// update under uniform errors.
pub fn simulated_update(task: &TaskSpec, w: &[f64], kind: ActivationKind, w_o: f64, draws: usize, rng: &mut Rng) -> Result<Vec<f64>> {
    if task.n_outputs() != 1 {
        return Err(Error::Unsupported("simulated updates need a single-output task".into()));
    }
    let mut net = init_network(task, &[2], kind, ReadoutMode::FrozenRandom, &mut Rng::new(0))?;
    net.layers[0].weights = Matrix::from_rows(&[w.to_vec(), w.to_vec()])?;
    net.readout = Matrix::from_rows(&[vec![w_o, -w_o]])?;
    let mut acc = vec![0.0; w.len()];
    for _ in 0..draws {
        let c = rng.below(task.n_clusters());
        let x = Matrix::from_columns(&[task.center(c)])?;
        let y = Matrix::from_rows(&[vec![task.labels[(0, c)]]])?;
        let (_, g) = net.loss_and_gradient(&x, &y)?;
        axpy(-1.0 / draws as f64, g.weights[0].row(0), &mut acc);
    }
    Ok(acc)
}

/// Mean alignment w·x̂ of each readout group's neurons with each unit-normalized
/// cluster center, per snapshot: `series[group][cluster][snapshot]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignmentCurves {
    pub groups: Vec<Vec<f64>>,
    pub steps: Vec<usize>,
    pub series: Vec<Vec<Vec<f64>>>,
}

/// `groups`/`assignment` are the readout patterns and each neuron's pattern index.
pub fn cluster_alignment_curves(
    snapshots: &[WeightSnapshot],
    task: &TaskSpec,
    groups: &[Vec<f64>],
    assignment: &[usize],
) -> Result<AlignmentCurves> {
    let p = task.n_clusters();
    let centers: Vec<Vec<f64>> = (0..p)
        .map(|c| {
            let x = task.center(c);
            let n = norm(&x);
            x.iter().map(|v| v / n).collect()
        })
        .collect();
    let mut series = vec![vec![Vec::with_capacity(snapshots.len()); p]; groups.len()];
    for s in snapshots {
        if s.weights.rows() != assignment.len() {
            return Err(contract("group assignment does not match the snapshot width"));
        }
        for (g, per_cluster) in series.iter_mut().enumerate() {
            let members: Vec<usize> = (0..assignment.len()).filter(|&j| assignment[j] == g).collect();
            for (c, out) in per_cluster.iter_mut().enumerate() {
                let total: f64 = members.iter().map(|&j| dot(s.weights.row(j), &centers[c])).sum();
                out.push(if members.is_empty() { 0.0 } else { total / members.len() as f64 });
            }
        }
    }
    Ok(AlignmentCurves { groups: groups.to_vec(), steps: snapshots.iter().map(|s| s.step).collect(), series })
}

/// Which projection dominates a weight state, and its sign.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionLabel {
    InterPositive,
    InterNegative,
    IntraPositive,
    IntraNegative,
}

impl RegionLabel {
    pub fn is_inter(self) -> bool {
        matches!(self, Self::InterPositive | Self::InterNegative)
    }

    /// Label of a point in the plane and whether it was a tie (ties go to inter).
    pub fn classify(inter: f64, intra: f64) -> (Self, bool) {
        let tie = (inter.abs() - intra.abs()).abs() <= 1e-12;
        let label = if tie || inter.abs() > intra.abs() {
            if inter >= 0.0 {
                Self::InterPositive
            } else {
                Self::InterNegative
            }
        } else if intra >= 0.0 {
            Self::IntraPositive
        } else {
            Self::IntraNegative
        };
        (label, tie)
    }
}

impl fmt::Display for RegionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::InterPositive => "inter+",
            Self::InterNegative => "inter-",
            Self::IntraPositive => "intra+",
            Self::IntraNegative => "intra-",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionTransition {
    pub neuron: usize,
    pub initial_position: (f64, f64),
    pub initial: RegionLabel,
    pub final_region: RegionLabel,
    pub tie: bool,
}

/// Region of each neuron's weights before and after training.
pub fn classify_regions(initial: &Matrix, final_weights: &Matrix, axes: &Axes, readout_signs: &[f64]) -> Result<Vec<RegionTransition>> {
    if initial.shape() != final_weights.shape() || readout_signs.len() != initial.rows() {
        return Err(contract("initial/final weights and readout signs disagree in shape"));
    }
    Ok((0..initial.rows())
        .map(|j| {
            let start = project(initial.row(j), axes, readout_signs[j]);
            let end = project(final_weights.row(j), axes, readout_signs[j]);
            let (initial, t0) = RegionLabel::classify(start.0, start.1);
            let (final_region, t1) = RegionLabel::classify(end.0, end.1);
            RegionTransition { neuron: j, initial_position: start, initial, final_region, tie: t0 || t1 }
        })
        .collect())
}
