//! Task generators: cluster prototypes plus balanced binary labels, and the
//! noisy datasets sampled around them.
//!
//! Labels are stored in ±1 form (one row per output, one column per
//! cluster). The training loss maps them to {0, 1} targets.

use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};
use crate::kernels::{
    cka, embed_kernel, gram_from_features, line_kernel, max_dim_kernel, sample_aligned_kernel,
    KernelMatrix,
};
use crate::linalg::{axpy, dot, norm, random_orthonormal, sym_eig, Matrix, Rng};

/// Default input dimension for the synthetic tasks.
pub const DEFAULT_INPUT_DIM: usize = 100;
pub const DEFAULT_TRAIN_PER_CLUSTER: usize = 128;
pub const DEFAULT_TEST_PER_CLUSTER: usize = 256;
/// Test-time noise used for every geometry analysis.
pub const SIGMA_TEST: f64 = 1.0;

const LABEL_REJECTION_BUDGET: usize = 10_000;

/// Which generator produced a task, with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TaskFamily {
    Unstructured,
    DeltaXor { delta: f64 },
    Aligned { alignment: f64, max_dim: bool },
    TwoOutput,
    Hard,
    Easy,
    Custom,
}

impl TaskFamily {
    pub fn tag(&self) -> &'static str {
        match self {
            TaskFamily::Unstructured => "unstructured",
            TaskFamily::DeltaXor { .. } => "delta_xor",
            TaskFamily::Aligned { .. } => "aligned",
            TaskFamily::TwoOutput => "two_output",
            TaskFamily::Hard => "hard",
            TaskFamily::Easy => "easy",
            TaskFamily::Custom => "custom",
        }
    }
}

/// Generative definition of an experiment's data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    #[serde(flatten)]
    pub family: TaskFamily,
    /// Seed of the stream the task was drawn from, when known.
    pub seed: Option<u64>,
    /// N × P cluster prototypes, one column per cluster.
    pub centers: Matrix,
    /// k × P labels in ±1 form.
    pub labels: Matrix,
    pub sigma_train: f64,
    pub sigma_test: f64,
    /// m × P binary (±1) generative variables, when the task has them.
    pub latent_factors: Option<Matrix>,
}

impl TaskSpec {
    /// Builds a task from explicit centers and labels, checking invariants.
    pub fn new(centers: Matrix, labels: Matrix) -> Result<Self> {
        let spec = TaskSpec {
            family: TaskFamily::Custom,
            seed: None,
            centers,
            labels,
            sigma_train: 1.0,
            sigma_test: SIGMA_TEST,
            latent_factors: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.centers.cols() != self.labels.cols() {
            return Err(contract(format!(
                "{} cluster centers but {} label columns",
                self.centers.cols(),
                self.labels.cols()
            )));
        }
        if !self.centers.is_finite() {
            return Err(contract("cluster centers must be finite"));
        }
        for r in 0..self.labels.rows() {
            let row = self.labels.row(r);
            if row.iter().any(|&v| v != 1.0 && v != -1.0) {
                return Err(contract(format!("label row {r} has entries outside {{-1, +1}}")));
            }
            if row.iter().sum::<f64>() != 0.0 {
                return Err(contract(format!("label row {r} is not balanced")));
            }
        }
        if !(self.sigma_train >= 0.0 && self.sigma_test >= 0.0) {
            return Err(contract("noise scales must be non-negative"));
        }
        Ok(())
    }

    pub fn with_sigma_train(mut self, sigma: f64) -> Self {
        self.sigma_train = sigma;
        self
    }

    pub fn input_dim(&self) -> usize {
        self.centers.rows()
    }

    pub fn n_clusters(&self) -> usize {
        self.centers.cols()
    }

    pub fn n_outputs(&self) -> usize {
        self.labels.rows()
    }

    pub fn center(&self, i: usize) -> Vec<f64> {
        self.centers.col(i)
    }

    pub fn label_kernel(&self) -> KernelMatrix {
        gram_from_features(&self.labels)
    }

    pub fn center_kernel(&self) -> KernelMatrix {
        gram_from_features(&self.centers)
    }

    /// CKA between the centered Gram of the noiseless centers and the label kernel.
    pub fn input_output_alignment(&self) -> Result<f64> {
        cka(&self.center_kernel(), &self.label_kernel())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: TaskSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Which noise scale a dataset is drawn with.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Train,
    Test,
}

/// Noisy samples around a task's cluster centers.
#[derive(Clone, Debug)]
pub struct Dataset {
    /// N × n, one column per sample.
    pub samples: Matrix,
    pub cluster_id: Vec<usize>,
    /// k × n in ±1 form.
    pub labels: Matrix,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.cluster_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cluster_id.is_empty()
    }

    /// Subset of sample columns, in the given order.
    pub fn select(&self, idx: &[usize]) -> Dataset {
        Dataset {
            samples: self.samples.select_cols(idx),
            cluster_id: idx.iter().map(|&i| self.cluster_id[i]).collect(),
            labels: self.labels.select_cols(idx),
        }
    }
}

/// Four-or-more Gaussian cluster centers with one label row: first half of the clusters −1, rest +1.
pub fn unstructured_task(p: usize, n: usize, rng: &mut Rng) -> Result<TaskSpec> {
    if p == 0 || p % 2 != 0 {
        return Err(contract(format!("unstructured task needs an even cluster count, got {p}")));
    }
    let seed = rng.seed();
    let centers = Matrix::from_fn(n, p, |_, _| rng.normal());
    let labels = Matrix::from_fn(1, p, |_, j| if j < p / 2 { -1.0 } else { 1.0 });
    Ok(TaskSpec {
        family: TaskFamily::Unstructured,
        seed: Some(seed),
        ..TaskSpec::new(centers, labels)?
    })
}

/// Four clusters interpolating between XOR (δ = 0) and equidistant (δ = 1).
///
/// Clusters sit at (1,1,δ), (−1,−1,δ), (1,−1,−δ), (−1,1,−δ) in a random
/// orthonormal 3-frame of ℝᴺ, scaled so every center has squared norm N. The
/// first two clusters carry label −1.
pub fn delta_xor_task(delta: f64, n: usize, rng: &mut Rng) -> Result<TaskSpec> {
    if n < 3 {
        return Err(contract(format!("delta task needs N >= 3, got {n}")));
    }
    if !(0.0..=1.0).contains(&delta) {
        return Err(contract(format!("delta must lie in [0, 1], got {delta}")));
    }
    let seed = rng.seed();
    let scale = (n as f64 / (2.0 + delta * delta)).sqrt();
    let coords = Matrix::from_columns(&[
        vec![1.0, 1.0, delta],
        vec![-1.0, -1.0, delta],
        vec![1.0, -1.0, -delta],
        vec![-1.0, 1.0, -delta],
    ])?;
    let frame = random_orthonormal(n, 3, rng)?;
    let centers = frame.matmul(&coords).scale(scale);
    let labels = Matrix::from_rows(&[vec![-1.0, -1.0, 1.0, 1.0]])?;
    Ok(TaskSpec {
        family: TaskFamily::DeltaXor { delta },
        seed: Some(seed),
        ..TaskSpec::new(centers, labels)?
    })
}

/// `k` distinct balanced ±1 rows over `p` clusters with a nonsingular Gram.
pub fn random_balanced_labels(p: usize, k: usize, rng: &mut Rng) -> Result<Matrix> {
    if p % 2 != 0 || p == 0 {
        return Err(contract(format!("balanced labels need an even cluster count, got {p}")));
    }
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut attempts = 0;
    while rows.len() < k {
        attempts += 1;
        if attempts > LABEL_REJECTION_BUDGET {
            return Err(Error::TaskSampling(format!(
                "could not draw {k} independent balanced rows over {p} clusters"
            )));
        }
        let row = random_balanced_row(p, rng);
        if rows.iter().any(|r| r == &row || r.iter().zip(&row).all(|(a, b)| *a == -b)) {
            continue;
        }
        rows.push(row);
        if rows.len() > 1 && !full_row_rank(&rows)? {
            rows.pop();
        }
    }
    Matrix::from_rows(&rows)
}

pub(crate) fn random_balanced_row(p: usize, rng: &mut Rng) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..p).collect();
    rng.shuffle(&mut idx);
    let mut row = vec![-1.0; p];
    for &i in &idx[..p / 2] {
        row[i] = 1.0;
    }
    row
}

fn full_row_rank(rows: &[Vec<f64>]) -> Result<bool> {
    let m = Matrix::from_rows(rows)?;
    let gram = m.matmul_nt(&m);
    let eig = sym_eig(&gram)?;
    Ok(eig.min_value() > 1e-9 * eig.values[0].max(1.0))
}

/// P clusters and k random balanced targets whose input kernel has alignment
/// exactly `c` with the label kernel.
///
/// With `max_dim` the input kernel is the maximal-dimensional point on the
/// line towards the label kernel; otherwise a random draw at that alignment.
/// Centers are scaled to a mean squared norm of N.
pub fn aligned_task(p: usize, k: usize, c: f64, n: usize, max_dim: bool, rng: &mut Rng) -> Result<TaskSpec> {
    if k == 0 || k + 1 >= p {
        return Err(Error::Infeasible(format!("aligned task needs 0 < k < P - 1, got k = {k}, P = {p}")));
    }
    let seed = rng.seed();
    let labels = random_balanced_labels(p, k, rng)?;
    let k_y = gram_from_features(&labels);
    let k_x = if max_dim {
        line_kernel(&k_y, &max_dim_kernel(&k_y, p)?, c)?
    } else {
        sample_aligned_kernel(&k_y, c, p, rng)?
    };
    let centers = embed_scaled(&k_x, n, rng)?;
    Ok(TaskSpec {
        family: TaskFamily::Aligned { alignment: c, max_dim },
        seed: Some(seed),
        ..TaskSpec::new(centers, labels)?
    })
}

/// Embeds a kernel into ℝᴺ and rescales the points to mean squared norm N.
fn embed_scaled(k_x: &KernelMatrix, n: usize, rng: &mut Rng) -> Result<Matrix> {
    let x = embed_kernel(k_x, n, rng)?;
    let p = k_x.size() as f64;
    let total: f64 = x.column_norms().iter().map(|v| v * v).sum();
    if total <= 0.0 {
        return Err(Error::DegenerateKernel("cannot embed a zero kernel".into()));
    }
    Ok(x.scale((n as f64 * p / total).sqrt()))
}

/// Four Gaussian clusters with two label rows (+,+,−,−) and (+,−,+,−).
pub fn two_output_task(n: usize, rng: &mut Rng) -> Result<TaskSpec> {
    if n < 4 {
        return Err(contract(format!("two-output task needs N >= 4, got {n}")));
    }
    let seed = rng.seed();
    let centers = Matrix::from_fn(n, 4, |_, _| rng.normal());
    let labels = Matrix::from_rows(&[vec![1.0, 1.0, -1.0, -1.0], vec![1.0, -1.0, 1.0, -1.0]])?;
    Ok(TaskSpec {
        family: TaskFamily::TwoOutput,
        seed: Some(seed),
        latent_factors: Some(labels.clone()),
        ..TaskSpec::new(centers, labels)?
    })
}

/// Cyclic coordinate pairs whose products label the hard task.
pub const HARD_TASK_PAIRS: [(usize, usize); 5] = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)];

/// Vertices of the 5-cube (rank-5 inputs) labelled by five order-2 parities,
/// so the input kernel has zero alignment with the targets.
pub fn hard_task(n: usize, rng: &mut Rng) -> Result<TaskSpec> {
    if n < 32 {
        return Err(contract(format!("hard task needs N >= 32, got {n}")));
    }
    let seed = rng.seed();
    let latent = hypercube_vertices(5);
    let labels = Matrix::from_fn(5, 32, |r, j| {
        let (a, b) = HARD_TASK_PAIRS[r];
        latent[(a, j)] * latent[(b, j)]
    });
    let frame = random_orthonormal(n, 5, rng)?;
    let centers = frame.matmul(&latent).scale((n as f64 / 5.0).sqrt());
    Ok(TaskSpec {
        family: TaskFamily::Hard,
        seed: Some(seed),
        latent_factors: Some(latent),
        ..TaskSpec::new(centers, labels)?
    })
}

/// 32 clusters with five random balanced targets and the maximal-dimensional
/// zero-alignment input kernel.
pub fn easy_task(n: usize, rng: &mut Rng) -> Result<TaskSpec> {
    if n < 32 {
        return Err(contract(format!("easy task needs N >= 32, got {n}")));
    }
    let seed = rng.seed();
    let labels = random_balanced_labels(32, 5, rng)?;
    let k_y = gram_from_features(&labels);
    let k_x = max_dim_kernel(&k_y, 32)?;
    let centers = embed_scaled(&k_x, n, rng)?;
    Ok(TaskSpec { family: TaskFamily::Easy, seed: Some(seed), ..TaskSpec::new(centers, labels)? })
}

/// d × 2ᵈ matrix of ±1 coordinates; column j encodes the bits of j.
pub fn hypercube_vertices(d: usize) -> Matrix {
    Matrix::from_fn(d, 1 << d, |r, j| if (j >> r) & 1 == 1 { 1.0 } else { -1.0 })
}

/// `per_cluster` samples around every center, cluster-major order.
pub fn sample_dataset(task: &TaskSpec, per_cluster: usize, phase: Phase, rng: &mut Rng) -> Result<Dataset> {
    if per_cluster == 0 {
        return Err(contract("per_cluster must be at least 1"));
    }
    let sigma = match phase {
        Phase::Train => task.sigma_train,
        Phase::Test => task.sigma_test,
    };
    let p = task.n_clusters();
    let n_in = task.input_dim();
    let total = p * per_cluster;
    let cluster_id: Vec<usize> = (0..total).map(|s| s / per_cluster).collect();
    let mut samples = Matrix::zeros(n_in, total);
    // Draw noise column by column so the stream does not depend on layout.
    for (s, &cid) in cluster_id.iter().enumerate() {
        for r in 0..n_in {
            let noise = if sigma > 0.0 { sigma * rng.normal() } else { 0.0 };
            samples[(r, s)] = task.centers[(r, cid)] + noise;
        }
    }
    let labels = Matrix::from_fn(task.n_outputs(), total, |r, s| task.labels[(r, cluster_id[s])]);
    Ok(Dataset { samples, cluster_id, labels })
}

/// Inter-class and intra-class directions of a single-output task.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axes {
    /// Unit Σᵢ yᵢxᵢ; all zeros when degenerate.
    pub inter: Vec<f64>,
    /// Unit within-class differences, orthogonalized against `inter`.
    pub intra: Vec<Vec<f64>>,
    /// Label sign of the class each intra axis separates.
    pub intra_class: Vec<f64>,
    /// The cluster pair (i, j) each intra axis is built from (xᵢ − xⱼ).
    pub intra_pairs: Vec<(usize, usize)>,
    pub degenerate: bool,
}

impl Axes {
    /// Intra axis for neurons whose readout sign is `w_o`: the pair within the
    /// class those neurons are driven to respond to.
    pub fn intra_for_readout(&self, w_o: f64) -> &[f64] {
        let idx = self.intra_class.iter().position(|&s| s == w_o.signum()).unwrap_or(0);
        &self.intra[idx]
    }
}

/// Inter-class axis Σᵢ yᵢxᵢ and the intra-class axes x₁−x₂, x₃−x₄ (the first
/// two clusters of each class).
pub fn class_axes(task: &TaskSpec) -> Result<Axes> {
    if task.n_outputs() != 1 {
        return Err(Error::Unsupported(format!(
            "class axes need a single-output task, got {} outputs",
            task.n_outputs()
        )));
    }
    let n_in = task.input_dim();
    let y = task.labels.row(0);
    let mut inter = vec![0.0; n_in];
    let mut scale: f64 = 0.0;
    for (i, &yi) in y.iter().enumerate() {
        let x = task.center(i);
        scale = scale.max(norm(&x));
        axpy(yi, &x, &mut inter);
    }
    let inter_norm = norm(&inter);
    let degenerate = inter_norm < 1e-10 * scale.max(1.0);
    if degenerate {
        inter.iter_mut().for_each(|v| *v = 0.0);
    } else {
        inter.iter_mut().for_each(|v| *v /= inter_norm);
    }

    let neg: Vec<usize> = (0..y.len()).filter(|&i| y[i] < 0.0).collect();
    let pos: Vec<usize> = (0..y.len()).filter(|&i| y[i] > 0.0).collect();
    let mut intra = Vec::new();
    let mut intra_class = Vec::new();
    let mut intra_pairs = Vec::new();
    for (members, sign) in [(&neg, -1.0), (&pos, 1.0)] {
        if members.len() < 2 {
            continue;
        }
        let (a, b) = (members[0], members[1]);
        let mut d: Vec<f64> = task.center(a).iter().zip(task.center(b)).map(|(u, v)| u - v).collect();
        if !degenerate {
            let proj = dot(&d, &inter);
            axpy(-proj, &inter, &mut d);
        }
        let dn = norm(&d);
        if dn > 0.0 {
            d.iter_mut().for_each(|v| *v /= dn);
        }
        intra.push(d);
        intra_class.push(sign);
        intra_pairs.push((a, b));
    }
    Ok(Axes { inter, intra, intra_class, intra_pairs, degenerate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use crate::linalg::Rng;

    fn sq_dist(t: &TaskSpec, i: usize, j: usize) -> f64 {
        t.center(i).iter().zip(t.center(j)).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    #[test]
    fn unstructured_labels_and_determinism() {
        let t = unstructured_task(4, 100, &mut Rng::new(1)).unwrap();
        assert_eq!(t.labels.row(0), &[-1.0, -1.0, 1.0, 1.0]);
        let again = unstructured_task(4, 100, &mut Rng::new(1)).unwrap();
        assert_eq!(t, again);
        assert!(unstructured_task(3, 10, &mut Rng::new(1)).is_err());
    }

    #[test]
    fn unstructured_distance_concentration() {
        // |xᵢ − xⱼ|² ~ 2χ²_N: mean 2N, sd 2√(2N) ≈ 28 at N = 100.
        let n = 100.0f64;
        let mut all = Vec::new();
        for seed in 0..50 {
            let t = unstructured_task(4, 100, &mut Rng::new(seed)).unwrap();
            for i in 0..4 {
                for j in (i + 1)..4 {
                    all.push(sq_dist(&t, i, j));
                }
            }
        }
        let mean = all.iter().sum::<f64>() / all.len() as f64;
        // Mean over 300 (weakly dependent) draws: standard error ≈ 28/√300·√2.
        assert!((mean - 2.0 * n).abs() < 4.0 * n.sqrt(), "mean {mean}");
        let within = all.iter().filter(|&&d| (d - 2.0 * n).abs() <= 4.0 * (2.0 * n).sqrt()).count();
        assert!(within as f64 / all.len() as f64 > 0.95);
    }

    #[test]
    fn delta_zero_is_xor() {
        let t = delta_xor_task(0.0, 50, &mut Rng::new(2)).unwrap();
        let mut inter = vec![0.0; 50];
        for (i, s) in [1.0, 1.0, -1.0, -1.0].iter().enumerate() {
            axpy(*s, &t.center(i), &mut inter);
        }
        assert!(norm(&inter) < 1e-12);
        assert!(class_axes(&t).unwrap().degenerate);
        assert!(t.input_output_alignment().unwrap().abs() < 1e-12);
    }

    #[test]
    fn delta_one_is_equidistant() {
        let n = 60;
        let t = delta_xor_task(1.0, n, &mut Rng::new(3)).unwrap();
        let expect = 8.0 * n as f64 / 3.0;
        for i in 0..4 {
            assert!((norm(&t.center(i)).powi(2) - n as f64).abs() < 1e-10);
            for j in (i + 1)..4 {
                assert!((sq_dist(&t, i, j) - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn delta_alignment_and_distance_ratio() {
        for &delta in &[0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0] {
            let t = delta_xor_task(delta, 20, &mut Rng::new(4)).unwrap();
            let closed = delta * delta / (2.0 + delta.powi(4)).sqrt();
            assert!((t.input_output_alignment().unwrap() - closed).abs() < 1e-8);
            let ratio = sq_dist(&t, 0, 2) / sq_dist(&t, 0, 1);
            assert!((ratio - (1.0 + delta * delta) / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn aligned_task_hits_alignment() {
        let mut rng = Rng::new(5);
        for &c in &[0.0, 0.3, 0.7, 1.0] {
            for &max_dim in &[true, false] {
                let t = aligned_task(8, 2, c, 40, max_dim, &mut rng).unwrap();
                assert!((t.input_output_alignment().unwrap() - c).abs() <= 1e-6);
                let mean_sq: f64 = t.centers.column_norms().iter().map(|v| v * v).sum::<f64>() / 8.0;
                assert!((mean_sq - 40.0).abs() < 1e-8);
            }
        }
        assert!(matches!(aligned_task(8, 7, 0.5, 40, true, &mut rng), Err(Error::Infeasible(_))));
    }

    #[test]
    fn aligned_task_max_dim_zero_alignment_dimension() {
        let t = aligned_task(32, 5, 0.0, 100, true, &mut Rng::new(6)).unwrap();
        let k = t.center_kernel().normalized().unwrap();
        let pr = crate::kernels::participation_ratio(&k).unwrap();
        assert!((pr - 26.0).abs() < 1e-8);
    }

    #[test]
    fn aligned_task_full_alignment_is_linearly_decodable() {
        let t = aligned_task(8, 3, 1.0, 30, true, &mut Rng::new(7)).unwrap();
        // Centers lie in the label row space, so each label is a linear readout of the centers.
        for r in 0..3 {
            let y = t.labels.row(r);
            let w = t.centers.matvec(y);
            let scores = t.centers.matvec_t(&w);
            let margin = scores.iter().zip(y).map(|(s, l)| s * l).fold(f64::INFINITY, f64::min);
            assert!(margin > 0.0);
        }
    }

    #[test]
    fn aligned_task_grid_shape_p8() {
        let mut rng = Rng::new(8);
        for k in 1..=6 {
            let t = aligned_task(8, k, 0.5, 20, true, &mut rng).unwrap();
            assert_eq!(t.labels.shape(), (k, 8));
        }
    }

    #[test]
    fn two_output_structure() {
        let t = two_output_task(10, &mut Rng::new(9)).unwrap();
        assert_eq!(t.labels.row(0), &[1.0, 1.0, -1.0, -1.0]);
        assert_eq!(t.labels.row(1), &[1.0, -1.0, 1.0, -1.0]);
        let eig = sym_eig(&t.labels.matmul_nt(&t.labels)).unwrap();
        assert!(eig.min_value() > 0.0);
        assert_eq!(t.latent_factors.as_ref().unwrap(), &t.labels);
    }

    #[test]
    fn hard_task_orthogonality() {
        let t = hard_task(64, &mut Rng::new(10)).unwrap();
        let z = t.latent_factors.as_ref().unwrap();
        // Exact integer inner products over the 32 vertices.
        for a in 0..5 {
            for b in 0..5 {
                let ll: f64 = dot(t.labels.row(a), t.labels.row(b));
                assert_eq!(ll, if a == b { 32.0 } else { 0.0 });
                assert_eq!(dot(t.labels.row(a), z.row(b)), 0.0);
            }
        }
        assert!(t.input_output_alignment().unwrap().abs() < 1e-10);
        let eig = sym_eig(t.center_kernel().matrix()).unwrap();
        let rank = eig.values.iter().filter(|&&l| l > 1e-8 * eig.values[0]).count();
        assert_eq!(rank, 5);
    }

    #[test]
    fn easy_task_dimension() {
        let t = easy_task(64, &mut Rng::new(11)).unwrap();
        let pr = crate::kernels::participation_ratio(&t.center_kernel().normalized().unwrap()).unwrap();
        assert!((pr - 26.0).abs() < 1e-8);
        assert!(t.input_output_alignment().unwrap().abs() < 1e-10);
    }

    #[test]
    fn noiseless_samples_equal_centers() {
        let t = unstructured_task(4, 8, &mut Rng::new(12)).unwrap().with_sigma_train(0.0);
        let d = sample_dataset(&t, 3, Phase::Train, &mut Rng::new(0)).unwrap();
        for s in 0..d.len() {
            assert_eq!(d.samples.col(s), t.center(d.cluster_id[s]));
        }
    }

    #[test]
    fn sample_variance_matches_sigma() {
        let sigma = 0.7;
        let t = unstructured_task(4, 5, &mut Rng::new(13)).unwrap().with_sigma_train(sigma);
        let d = sample_dataset(&t, 2000, Phase::Train, &mut Rng::new(1)).unwrap();
        let n = 2000.0;
        for c in 0..4 {
            for r in 0..5 {
                let vals: Vec<f64> = (0..d.len())
                    .filter(|&s| d.cluster_id[s] == c)
                    .map(|s| d.samples[(r, s)] - t.centers[(r, c)])
                    .collect();
                let var = vals.iter().map(|v| v * v).sum::<f64>() / n;
                let s2 = sigma * sigma;
                assert!((var - s2).abs() <= 3.0 * s2 * (2.0 / n).sqrt() * 1.5, "var {var}");
            }
        }
    }

    #[test]
    fn class_axes_unstructured() {
        let t = unstructured_task(4, 30, &mut Rng::new(14)).unwrap();
        let axes = class_axes(&t).unwrap();
        let mut expected = vec![0.0; 30];
        for (i, s) in [1.0, 1.0, -1.0, -1.0].iter().enumerate() {
            axpy(*s, &t.center(i), &mut expected);
        }
        // Σ yᵢxᵢ with y = (−,−,+,+) is −(x₁ + x₂ − x₃ − x₄).
        let cos = dot(&axes.inter, &expected) / norm(&expected);
        assert!((cos + 1.0).abs() < 1e-12);
        for v in &axes.intra {
            assert!(dot(v, &axes.inter).abs() < 1e-10);
            assert!((norm(v) - 1.0).abs() < 1e-12);
        }
        assert_eq!(axes.intra_pairs, vec![(0, 1), (2, 3)]);
        assert!(!axes.degenerate);
        assert!(class_axes(&two_output_task(8, &mut Rng::new(0)).unwrap()).is_err());
    }

    #[test]
    fn task_json_round_trip() {
        let t = hard_task(40, &mut Rng::new(15)).unwrap();
        let back = TaskSpec::from_json(&t.to_json().unwrap()).unwrap();
        assert_eq!(back, t);
        let v: serde_json::Value = serde_json::from_str(&t.to_json().unwrap()).unwrap();
        assert_eq!(v["family"], "hard");
        assert!(v["sigma_test"].is_number() && v["seed"].is_number());
    }

    #[test]
    fn validation_rejects_unbalanced() {
        let centers = Matrix::zeros(3, 4);
        let labels = Matrix::from_rows(&[vec![1.0, 1.0, 1.0, -1.0]]).unwrap();
        assert!(TaskSpec::new(centers, labels).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn generated_labels_balanced(seed in any::<u64>(), k in 1usize..6, c in 0.0f64..=1.0) {
            let mut rng = Rng::new(seed);
            let t = aligned_task(8, k.min(6), c, 16, seed % 2 == 0, &mut rng).unwrap();
            for r in 0..t.n_outputs() {
                prop_assert_eq!(t.labels.row(r).iter().sum::<f64>(), 0.0);
            }
            prop_assert!((t.input_output_alignment().unwrap() - c).abs() <= 1e-6);
        }
    }
}
