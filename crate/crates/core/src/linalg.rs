//! Helpers for small complex Hermitian matrices.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Largest entrywise deviation of `m` from its conjugate transpose.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut d = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            d = d.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    d
}

/// `(m + m^H) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    CMatrix::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5)
}

/// Operator norm of the anti-Hermitian part `(m - m^H) / 2`.
pub fn anti_hermitian_norm(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let a = CMatrix::from_fn(n, n, |i, j| {
        (m[(i, j)] - m[(j, i)].conj()) * Complex64::new(0.0, -0.5)
    });
    // a is Hermitian; its operator norm is the largest |eigenvalue|.
    hermitian_eigenvalues(&a)
        .iter()
        .fold(0.0f64, |acc, &e| acc.max(e.abs()))
}

/// Real eigenvalues of a Hermitian matrix (ascending).
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = hermitian_part(m)
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m)[0]
}

/// Operator norm of a Hermitian matrix.
pub fn operator_norm(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m)
        .iter()
        .fold(0.0f64, |acc, &e| acc.max(e.abs()))
}

/// Real part of the quadratic form `h^H m h` (exact for Hermitian `m`).
pub fn quadratic_form(m: &CMatrix, h: &CVector) -> f64 {
    let mh = m * h;
    h.dotc(&mh).re
}

/// Frobenius distance between two matrices.
pub fn frobenius_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm()
}

/// Real trace of a (Hermitian) matrix.
pub fn trace_re(m: &CMatrix) -> f64 {
    (0..m.nrows()).map(|i| m[(i, i)].re).sum()
}

/// 1x1 complex matrix from a real scalar.
pub fn scalar_matrix(x: f64) -> CMatrix {
    CMatrix::from_element(1, 1, Complex64::new(x, 0.0))
}

/// Standard basis vector `e_i` of length `dim`.
pub fn basis_vector(dim: usize, i: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    v[i] = Complex64::new(1.0, 0.0);
    v
}
