//! Dense linear algebra: matrices, symmetric eigendecomposition, orthonormal
//! frames, PSD projection, and the seeded random stream.

mod eig;
mod matrix;
mod rng;

pub use eig::{psd_clip, random_orthonormal, sym_eig, SymEig};
pub use matrix::{axpy, cosine, dot, norm, Matrix};
pub use rng::{derive_seed, Rng};
