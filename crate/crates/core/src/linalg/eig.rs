use super::matrix::{axpy, dot, norm, Matrix};
use super::rng::Rng;
use crate::error::{contract, Result};

const MAX_SIZE: usize = 256;
const MAX_SWEEPS: usize = 100;
/// Off-diagonal Frobenius norm at which Jacobi sweeps stop, relative to ‖A‖_F.
const OFF_DIAG_TOL: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-10;

/// Eigendecomposition of a symmetric matrix, eigenvalues in descending order.
#[derive(Clone, Debug)]
pub struct SymEig {
    pub values: Vec<f64>,
    /// Eigenvectors as columns, matched to `values`.
    pub vectors: Matrix,
}

impl SymEig {
    /// V · diag(values) · Vᵀ.
    pub fn reconstruct(&self) -> Matrix {
        self.reconstruct_with(|l| l)
    }

    /// V · diag(g(λ)) · Vᵀ.
    pub fn reconstruct_with(&self, g: impl Fn(f64) -> f64) -> Matrix {
        let n = self.vectors.rows();
        let mut scaled = self.vectors.clone();
        for r in 0..n {
            for (c, &l) in self.values.iter().enumerate() {
                scaled[(r, c)] *= g(l);
            }
        }
        scaled.matmul_nt(&self.vectors).symmetrized()
    }

    pub fn min_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
pub fn sym_eig(a: &Matrix) -> Result<SymEig> {
    if !a.is_square() {
        return Err(contract(format!("sym_eig needs a square matrix, got {:?}", a.shape())));
    }
    let n = a.rows();
    if n > MAX_SIZE {
        return Err(contract(format!("sym_eig supports n <= {MAX_SIZE}, got {n}")));
    }
    if !a.is_finite() {
        return Err(contract("sym_eig input has non-finite entries"));
    }
    if !a.is_symmetric(SYMMETRY_TOL) {
        return Err(contract("sym_eig input is not symmetric"));
    }

    let mut w = a.symmetrized();
    let mut v = Matrix::identity(n);
    let scale = a.frobenius_norm();
    let tol = OFF_DIAG_TOL * scale.max(f64::MIN_POSITIVE);

    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&w) <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = w[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (w[(q, q)] - w[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate_cols(&mut w, p, q, c, s);
                rotate_rows(&mut w, p, q, c, s);
                w[(p, q)] = 0.0;
                w[(q, p)] = 0.0;
                rotate_cols(&mut v, p, q, c, s);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| w[(j, j)].total_cmp(&w[(i, i)]));
    let values = order.iter().map(|&i| w[(i, i)]).collect();
    let vectors = v.select_cols(&order);
    Ok(SymEig { values, vectors })
}

fn off_diagonal_norm(m: &Matrix) -> f64 {
    let n = m.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += m[(i, j)] * m[(i, j)];
            }
        }
    }
    s.sqrt()
}

fn rotate_cols(m: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    for k in 0..m.rows() {
        let mkp = m[(k, p)];
        let mkq = m[(k, q)];
        m[(k, p)] = c * mkp - s * mkq;
        m[(k, q)] = s * mkp + c * mkq;
    }
}

fn rotate_rows(m: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    for k in 0..m.cols() {
        let mpk = m[(p, k)];
        let mqk = m[(q, k)];
        m[(p, k)] = c * mpk - s * mqk;
        m[(q, k)] = s * mpk + c * mqk;
    }
}

/// Random `rows × cols` matrix with orthonormal columns.
///
/// Orthonormalizes a standard-normal matrix with modified Gram–Schmidt and a
/// second re-orthogonalization pass.
pub fn random_orthonormal(rows: usize, cols: usize, rng: &mut Rng) -> Result<Matrix> {
    if rows < cols {
        return Err(contract(format!("random_orthonormal needs rows >= cols, got {rows} < {cols}")));
    }
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(cols);
    while basis.len() < cols {
        let mut v = rng.normals(rows);
        for _pass in 0..2 {
            for b in &basis {
                let proj = dot(&v, b);
                axpy(-proj, b, &mut v);
            }
        }
        let n = norm(&v);
        // A draw numerically inside the current span has probability zero; redraw.
        if n < 1e-8 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= n);
        basis.push(v);
    }
    Matrix::from_columns(&basis)
}

/// Frobenius-nearest PSD matrix: negative eigenvalues set to zero.
pub fn psd_clip(a: &Matrix) -> Result<Matrix> {
    let eig = sym_eig(a)?;
    if eig.min_value() >= 0.0 {
        return Ok(a.symmetrized());
    }
    Ok(eig.reconstruct_with(|l| l.max(0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use crate::linalg::Rng;

    fn random_symmetric(n: usize, rng: &mut Rng) -> Matrix {
        let g = Matrix::from_fn(n, n, |_, _| rng.normal());
        g.symmetrized()
    }

    fn orthogonality_error(v: &Matrix) -> f64 {
        v.matmul_tn(v).sub(&Matrix::identity(v.cols())).frobenius_norm()
    }

    #[test]
    fn identity_has_unit_spectrum() {
        let e = sym_eig(&Matrix::identity(3)).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn delta_gram_diagonal_case() {
        let delta: f64 = 1.0;
        let e = sym_eig(&Matrix::diag(&[4.0, 4.0, 4.0 * delta * delta])).unwrap();
        for l in e.values {
            assert!((l - 4.0).abs() < 1e-14);
        }
    }

    #[test]
    fn eigenvalues_descend() {
        let e = sym_eig(&Matrix::diag(&[1.0, 5.0, -2.0, 3.0])).unwrap();
        assert_eq!(e.values, vec![5.0, 3.0, 1.0, -2.0]);
    }

    #[test]
    fn random_8x8_reconstructs() {
        let mut rng = Rng::new(1);
        let a = random_symmetric(8, &mut rng);
        let e = sym_eig(&a).unwrap();
        assert!(e.reconstruct().sub(&a).frobenius_norm() <= 1e-8 * a.frobenius_norm());
        assert!(orthogonality_error(&e.vectors) <= 1e-8);
    }

    #[test]
    fn known_2x2_spectrum() {
        let a = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let e = sym_eig(&a).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-14 && (e.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_square_and_asymmetric() {
        assert!(sym_eig(&Matrix::zeros(2, 3)).is_err());
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(sym_eig(&a).is_err());
    }

    #[test]
    fn handles_zero_matrix() {
        let e = sym_eig(&Matrix::zeros(4, 4)).unwrap();
        assert!(e.values.iter().all(|&l| l == 0.0));
    }

    #[test]
    fn orthonormal_frames() {
        let mut rng = Rng::new(2);
        let o = random_orthonormal(4, 4, &mut rng).unwrap();
        assert!(orthogonality_error(&o) <= 1e-10);
        let tall = random_orthonormal(100, 4, &mut rng).unwrap();
        for n in tall.column_norms() {
            assert!((n - 1.0).abs() <= 1e-10);
        }
        assert!(random_orthonormal(3, 4, &mut rng).is_err());
    }

    #[test]
    fn orthonormal_determinism() {
        let a = random_orthonormal(10, 3, &mut Rng::new(5)).unwrap();
        let b = random_orthonormal(10, 3, &mut Rng::new(5)).unwrap();
        let c = random_orthonormal(10, 3, &mut Rng::new(6)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn psd_clip_cases() {
        let a = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        assert!(psd_clip(&a).unwrap().max_abs_diff(&a) < 1e-10);
        let d = psd_clip(&Matrix::diag(&[1.0, -1.0])).unwrap();
        assert!(d.max_abs_diff(&Matrix::diag(&[1.0, 0.0])) < 1e-14);
    }

    #[test]
    fn psd_clip_random_has_nonnegative_spectrum() {
        let mut rng = Rng::new(3);
        let a = random_symmetric(8, &mut rng);
        let clipped = psd_clip(&a).unwrap();
        assert!(sym_eig(&clipped).unwrap().min_value() >= -1e-10);
        // Nearest-PSD oracle: the residual A − clip(A) is the negative part, NSD and orthogonal to clip(A).
        let residual = a.sub(&clipped);
        assert!(sym_eig(&residual).unwrap().values[0] <= 1e-10);
        assert!(residual.frobenius_dot(&clipped).abs() < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn reconstruction_holds(seed in any::<u64>(), n in 1usize..=32) {
            let mut rng = Rng::new(seed);
            let a = random_symmetric(n, &mut rng);
            let e = sym_eig(&a).unwrap();
            let err = e.reconstruct().sub(&a).frobenius_norm();
            prop_assert!(err <= 1e-8 * a.frobenius_norm().max(1.0));
            prop_assert!(orthogonality_error(&e.vectors) <= 1e-8);
            prop_assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        }

        #[test]
        fn orthonormal_any_shape(seed in any::<u64>(), cols in 1usize..12, extra in 0usize..40) {
            let o = random_orthonormal(cols + extra, cols, &mut Rng::new(seed)).unwrap();
            prop_assert!(orthogonality_error(&o) <= 1e-9);
        }

        #[test]
        fn psd_clip_idempotent(seed in any::<u64>(), n in 1usize..12) {
            let a = random_symmetric(n, &mut Rng::new(seed));
            let once = psd_clip(&a).unwrap();
            let twice = psd_clip(&once).unwrap();
            prop_assert!(twice.max_abs_diff(&once) <= 1e-12 * once.max_abs().max(1.0));
        }
    }
}
