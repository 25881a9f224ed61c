//! Small complex-matrix helpers shared by the state and channel algebra.
//!
//! Storage is row-major `ndarray::Array2<Complex64>`; Hermitian eigenvalues
//! are bridged to `nalgebra`'s QR-based solver, which handles complex
//! Hermitian input.

use nalgebra::DMatrix;
use ndarray::Array2;
use num_complex::Complex64;

pub type CMat = Array2<Complex64>;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub(crate) fn czero(rows: usize, cols: usize) -> CMat {
    Array2::from_elem((rows, cols), ZERO)
}

pub(crate) fn identity(n: usize) -> CMat {
    let mut m = czero(n, n);
    for i in 0..n {
        m[[i, i]] = ONE;
    }
    m
}

/// Conjugate transpose.
pub(crate) fn dagger(m: &CMat) -> CMat {
    let mut out = czero(m.ncols(), m.nrows());
    for ((i, j), v) in m.indexed_iter() {
        out[[j, i]] = v.conj();
    }
    out
}

pub(crate) fn trace(m: &CMat) -> Complex64 {
    debug_assert_eq!(m.nrows(), m.ncols());
    (0..m.nrows()).map(|i| m[[i, i]]).sum()
}

pub(crate) fn frob_norm(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn frob_dist(a: &CMat, b: &CMat) -> f64 {
    debug_assert_eq!(a.dim(), b.dim());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ra, ca) = a.dim();
    let (rb, cb) = b.dim();
    let mut out = czero(ra * rb, ca * cb);
    for ((i, j), &av) in a.indexed_iter() {
        if av == ZERO {
            continue;
        }
        for ((k, l), &bv) in b.indexed_iter() {
            out[[i * rb + k, j * cb + l]] = av * bv;
        }
    }
    out
}

pub(crate) fn max_abs_offhermitian(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            let dev = (m[[i, j]] - m[[j, i]].conj()).norm();
            if dev > worst {
                worst = dev;
            }
        }
    }
    worst
}

pub(crate) fn is_hermitian(m: &CMat, tol: f64) -> bool {
    m.nrows() == m.ncols() && max_abs_offhermitian(m) <= tol
}

/// Eigenvalues of a Hermitian matrix, ascending. The caller is responsible
/// for hermiticity; the solver only sees the Hermitian part.
pub(crate) fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    let n = m.nrows();
    debug_assert_eq!(n, m.ncols());
    let dm = DMatrix::from_fn(n, n, |i, j| m[[i, j]]);
    let mut ev: Vec<f64> = dm.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).expect("eigenvalues are finite"));
    ev
}

/// Singular values, descending. Computed by bidiagonalization (not via the
/// Gram matrix, whose eigenvalue noise would swamp near-zero singular values).
pub(crate) fn singular_values(m: &CMat) -> Vec<f64> {
    let dm = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[[i, j]]);
    let mut sv: Vec<f64> = dm.svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).expect("singular values are finite"));
    sv
}
