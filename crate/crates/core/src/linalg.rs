//! Small dense linear-algebra helpers shared by the model, engine and diagnostics.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, VitsError};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

pub fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(VitsError::DimensionMismatch { expected, got });
    }
    Ok(())
}

pub fn check_square(m: &Matrix, d: usize) -> Result<()> {
    check_dim(d, m.nrows())?;
    check_dim(d, m.ncols())
}

pub fn all_finite_vec(v: &Vector) -> bool {
    v.iter().all(|x| x.is_finite())
}

pub fn all_finite_mat(m: &Matrix) -> bool {
    m.iter().all(|x| x.is_finite())
}

/// Returns `(M + Mᵀ) / 2`.
pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// Largest absolute entry of `M - Mᵀ`.
pub fn asymmetry(m: &Matrix) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Smallest and largest eigenvalue of a symmetric matrix.
pub fn sym_extreme_eigenvalues(m: &Matrix) -> (f64, f64) {
    let eig = m.clone().symmetric_eigen();
    let min = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let max = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    (min, max)
}

pub fn sym_min_eigenvalue(m: &Matrix) -> f64 {
    sym_extreme_eigenvalues(m).0
}

/// Spectral norm (largest singular value).
pub fn spectral_norm(m: &Matrix) -> f64 {
    m.singular_values().iter().copied().fold(0.0, f64::max)
}

/// Applies `f` to the eigenvalues of a symmetric matrix, clamping eigenvalues below
/// `clamp_tol` in magnitude (or negative) to zero first.
pub fn sym_apply(m: &Matrix, clamp_tol: f64, f: impl Fn(f64) -> f64) -> Matrix {
    let eig = symmetrize(m).symmetric_eigen();
    let vals = eig.eigenvalues.map(|x| {
        let x = if x < clamp_tol { 0.0 } else { x };
        f(x)
    });
    let q = &eig.eigenvectors;
    q * Matrix::from_diagonal(&vals) * q.transpose()
}

/// Principal square root of a symmetric PSD matrix.
pub fn sqrtm_psd(m: &Matrix) -> Matrix {
    sym_apply(m, 1e-12, f64::sqrt)
}

/// Inverse of an invertible matrix via LU.
pub fn inverse(m: &Matrix, what: &'static str) -> Result<Matrix> {
    m.clone()
        .lu()
        .try_inverse()
        .ok_or(VitsError::Singular(what))
}

pub fn outer(a: &Vector, b: &Vector) -> Matrix {
    a * b.transpose()
}
