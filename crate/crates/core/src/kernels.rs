//! Kernel matrices and centered kernel alignment.
//!
//! All kernels used for alignment are centered (their nullspace contains the
//! all-ones vector). The sampler and line construction additionally work with
//! unit-trace kernels so that the participation ratio is `1 / ‖K‖_F²`.

use std::io::{BufRead, Write};

use crate::error::{contract, Error, Result};
use crate::linalg::{psd_clip, random_orthonormal, sym_eig, Matrix, Rng};

const SYMMETRY_TOL: f64 = 1e-10;
const CENTER_TOL: f64 = 1e-8;
const TRACE_TOL: f64 = 1e-10;
const DEGENERATE_DENOM: f64 = 1e-14;
/// Relative eigenvalue threshold below which a direction counts as null.
const RANK_TOL: f64 = 1e-10;
const SAMPLER_TARGET: f64 = 1e-9;
const SAMPLER_TOL: f64 = 1e-6;
const BISECTION_STEPS: usize = 200;

/// Symmetric P×P similarity matrix with its centering / normalization state.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelMatrix {
    matrix: Matrix,
    centered: bool,
    unit_trace: bool,
}

impl KernelMatrix {
    /// Wraps a symmetric matrix, detecting the centered and unit-trace flags numerically.
    pub fn from_matrix(matrix: Matrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(contract(format!("kernel must be square, got {:?}", matrix.shape())));
        }
        if !matrix.is_finite() {
            return Err(contract("kernel has non-finite entries"));
        }
        if !matrix.is_symmetric(SYMMETRY_TOL) {
            return Err(contract("kernel is not symmetric"));
        }
        let matrix = matrix.symmetrized();
        let centered = is_centered(&matrix);
        let unit_trace = (matrix.trace() - 1.0).abs() <= TRACE_TOL;
        Ok(Self { matrix, centered, unit_trace })
    }

    pub fn size(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    pub fn is_unit_trace(&self) -> bool {
        self.unit_trace
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    /// H K H with H = I − 11ᵀ/P.
    pub fn centered(&self) -> KernelMatrix {
        let p = self.size();
        let row_means = self.matrix.row_means();
        let grand = row_means.iter().sum::<f64>() / p.max(1) as f64;
        // K is symmetric, so column means equal row means.
        let m = Matrix::from_fn(p, p, |i, j| {
            self.matrix[(i, j)] - row_means[i] - row_means[j] + grand
        });
        let mut k = KernelMatrix::from_matrix(m.symmetrized()).expect("centering preserves symmetry");
        k.centered = true;
        k
    }

    /// K / Tr K.
    pub fn normalized(&self) -> Result<KernelMatrix> {
        let tr = self.trace();
        if tr.abs() < DEGENERATE_DENOM {
            return Err(Error::DegenerateKernel("cannot normalize a zero-trace kernel".into()));
        }
        Ok(KernelMatrix {
            matrix: self.matrix.scale(1.0 / tr),
            centered: self.centered,
            unit_trace: true,
        })
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(sym_eig(&self.matrix)?.min_value())
    }

    /// ‖K·1‖.
    pub fn ones_residual(&self) -> f64 {
        self.matrix.row_means().iter().map(|m| m * m).sum::<f64>().sqrt() * self.size() as f64
    }

    /// Convex combination (1−t)·self + t·other; flags carried when both agree.
    fn mix(&self, other: &KernelMatrix, t: f64) -> KernelMatrix {
        let mut m = self.matrix.scale(1.0 - t);
        m.add_scaled(t, &other.matrix);
        KernelMatrix {
            matrix: m,
            centered: self.centered && other.centered,
            unit_trace: self.unit_trace && other.unit_trace,
        }
    }

    /// Writes P lines of P comma-separated values with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for r in 0..self.size() {
            let line: Vec<String> = self.matrix.row(r).iter().map(|x| format!("{x:.16e}")).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<KernelMatrix> {
        let mut rows = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| contract(format!("kernel csv line {}: {e}", i + 1)))?;
            rows.push(row);
        }
        KernelMatrix::from_matrix(Matrix::from_rows(&rows)?)
    }
}

fn is_centered(m: &Matrix) -> bool {
    let p = m.rows() as f64;
    let residual = m.row_means().iter().map(|x| x * x).sum::<f64>().sqrt() * p;
    residual <= CENTER_TOL * m.frobenius_norm().max(f64::MIN_POSITIVE) || m.max_abs() == 0.0
}

/// Centered Gram matrix of `features` (n_features × P, one column per point).
pub fn gram_from_features(features: &Matrix) -> KernelMatrix {
    let xc = features.center_rows();
    let k = xc.matmul_tn(&xc).symmetrized();
    KernelMatrix { centered: true, unit_trace: (k.trace() - 1.0).abs() <= TRACE_TOL, matrix: k }
}

/// Centered kernel alignment Tr(K₁K₂)/√(Tr(K₁K₁)·Tr(K₂K₂)).
pub fn cka(k1: &KernelMatrix, k2: &KernelMatrix) -> Result<f64> {
    if k1.size() != k2.size() {
        return Err(contract(format!("cka size mismatch: {} vs {}", k1.size(), k2.size())));
    }
    if !k1.centered || !k2.centered {
        return Err(contract("cka requires centered kernels"));
    }
    let cross = k1.matrix.frobenius_dot(&k2.matrix);
    let n1 = k1.matrix.frobenius_dot(&k1.matrix);
    let n2 = k2.matrix.frobenius_dot(&k2.matrix);
    alignment_ratio(cross, n1, n2)
}

/// CKA between the linear kernels of two feature matrices sharing their
/// columns (d₁×n and d₂×n), without forming the n×n Gram matrices.
///
/// Uses Tr(K₁K₂) = ‖X₁ X₂ᵀ‖_F² for row-centered features.
pub fn cka_features(x1: &Matrix, x2: &Matrix) -> Result<f64> {
    if x1.cols() != x2.cols() {
        return Err(contract(format!("feature cka sample mismatch: {} vs {}", x1.cols(), x2.cols())));
    }
    let a = x1.center_rows();
    let b = x2.center_rows();
    let cross = a.matmul_nt(&b);
    let aa = a.matmul_nt(&a);
    let bb = b.matmul_nt(&b);
    alignment_ratio(
        cross.frobenius_dot(&cross),
        aa.frobenius_dot(&aa),
        bb.frobenius_dot(&bb),
    )
}

fn alignment_ratio(cross: f64, n1: f64, n2: f64) -> Result<f64> {
    let denom = (n1 * n2).sqrt();
    if !(denom >= DEGENERATE_DENOM) {
        return Err(Error::DegenerateKernel(format!("alignment denominator {denom:e}")));
    }
    Ok(cross / denom)
}

/// (Σλ)²/Σλ², which is 1/‖K‖_F² for a unit-trace kernel.
pub fn participation_ratio(k: &KernelMatrix) -> Result<f64> {
    if !k.unit_trace {
        return Err(contract(format!("participation ratio needs unit trace, got {}", k.trace())));
    }
    let f2 = k.matrix.frobenius_dot(&k.matrix);
    if f2 < DEGENERATE_DENOM {
        return Err(Error::DegenerateKernel("zero kernel".into()));
    }
    Ok(1.0 / f2)
}

/// Unit-trace centered kernel of maximal participation ratio at zero
/// alignment with `k_y`: the scaled projector onto the complement of
/// span{1, range(K_Y)}.
pub fn max_dim_kernel(k_y: &KernelMatrix, p: usize) -> Result<KernelMatrix> {
    if k_y.size() != p {
        return Err(contract(format!("label kernel is {}x{0}, expected P = {p}", k_y.size())));
    }
    if !k_y.centered {
        return Err(contract("max_dim_kernel needs a centered label kernel"));
    }
    let eig = sym_eig(&k_y.matrix)?;
    let top = eig.values.first().copied().unwrap_or(0.0).max(0.0);
    let range: Vec<Vec<f64>> = eig
        .values
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > RANK_TOL * top && top > 0.0)
        .map(|(i, _)| eig.vectors.col(i))
        .collect();
    let k = range.len();
    if k + 1 >= p {
        return Err(Error::Infeasible(format!(
            "label rank {k} leaves no complement in a centered {p}-point space"
        )));
    }
    let mut proj = Matrix::identity(p);
    let inv_p = 1.0 / p as f64;
    for i in 0..p {
        for j in 0..p {
            let mut v = proj[(i, j)] - inv_p;
            for u in &range {
                v -= u[i] * u[j];
            }
            proj[(i, j)] = v;
        }
    }
    let dim = (p - 1 - k) as f64;
    Ok(KernelMatrix { matrix: proj.symmetrized().scale(1.0 / dim), centered: true, unit_trace: true })
}

/// Point on the segment from `k_max` (alignment 0) to normalized `k_y`
/// (alignment 1) whose alignment with `k_y` equals `c`.
pub fn line_kernel(k_y: &KernelMatrix, k_max: &KernelMatrix, c: f64) -> Result<KernelMatrix> {
    check_alignment_target(c)?;
    let y_hat = k_y.normalized()?;
    if c == 0.0 {
        return Ok(k_max.clone());
    }
    if c == 1.0 {
        return Ok(y_hat);
    }
    let align = |t: f64| cka(&k_max.mix(&y_hat, t), k_y);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if align(mid)? < c {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON {
            break;
        }
    }
    let t = if (align(lo)? - c).abs() <= (align(hi)? - c).abs() { lo } else { hi };
    Ok(k_max.mix(&y_hat, t))
}

fn check_alignment_target(c: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&c) {
        return Err(contract(format!("alignment target must lie in [0, 1], got {c}")));
    }
    Ok(())
}

/// Random SPSD, centered, unit-trace kernel with alignment exactly `c` to `k_y`.
///
/// Draws a random centered Wishart kernel and slides it along the segment
/// towards normalized `k_y` (to raise alignment) or towards the maximal-
/// dimensional zero-alignment kernel (to lower it), solving for the mixing
/// weight by bisection. Both segments stay inside the SPSD unit-trace body.
pub fn sample_aligned_kernel(k_y: &KernelMatrix, c: f64, p: usize, rng: &mut Rng) -> Result<KernelMatrix> {
    check_alignment_target(c)?;
    if k_y.size() != p {
        return Err(contract(format!("label kernel is {}x{0}, expected P = {p}", k_y.size())));
    }
    let y_hat = k_y.normalized()?;
    if c == 1.0 {
        return Ok(y_hat);
    }
    let k_max = max_dim_kernel(k_y, p)?;

    let w = Matrix::from_fn(p + 2, p, |_, _| rng.normal());
    let wishart = gram_from_features(&w);
    let mut start = KernelMatrix::from_matrix(psd_clip(wishart.matrix())?)?.centered();
    start = start.normalized()?;

    let start_align = cka(&start, k_y)?;
    let target = if start_align < c { &y_hat } else { &k_max };
    let align = |t: f64| -> Result<f64> { Ok(cka(&start.mix(target, t), k_y)? - c) };

    let end_gap = align(1.0)?;
    if end_gap.abs() <= SAMPLER_TARGET {
        return Ok(start.mix(target, 1.0));
    }
    // g(0) and g(1) bracket zero; keep the bracket while halving.
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let lo_sign = align(0.0)?.signum();
    let mut best = (f64::INFINITY, 0.0);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        let g = align(mid)?;
        if g.abs() < best.0 {
            best = (g.abs(), mid);
        }
        if g.abs() <= SAMPLER_TARGET {
            break;
        }
        if g.signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if best.0 > SAMPLER_TOL {
        return Err(Error::Sampler(format!(
            "alignment residual {:.3e} after {BISECTION_STEPS} bisection steps",
            best.0
        )));
    }
    Ok(start.mix(target, best.1))
}

/// N-dimensional points whose Gram matrix is `k_x`: X = O Λ^½ Uᵀ with a
/// random orthonormal O restricted to the kernel's nonzero eigenspace.
pub fn embed_kernel(k_x: &KernelMatrix, n: usize, rng: &mut Rng) -> Result<Matrix> {
    let eig = sym_eig(k_x.matrix())?;
    let top = eig.values.first().copied().unwrap_or(0.0).max(0.0);
    if eig.min_value() < -1e-8 * top.max(1.0) {
        return Err(contract(format!("kernel is not PSD (min eigenvalue {:e})", eig.min_value())));
    }
    let kept: Vec<usize> = (0..eig.values.len()).filter(|&i| eig.values[i] > RANK_TOL * top).collect();
    let rank = kept.len();
    if n < rank {
        return Err(contract(format!("embedding dimension {n} below kernel rank {rank}")));
    }
    let o = random_orthonormal(n, rank, rng)?;
    // Λ^½ Uᵀ restricted to kept directions: rank × P.
    let p = k_x.size();
    let half = Matrix::from_fn(rank, p, |r, j| {
        let i = kept[r];
        eig.values[i].sqrt() * eig.vectors[(j, i)]
    });
    Ok(o.matmul(&half))
}
