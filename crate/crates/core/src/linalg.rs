//! Small dense helpers on top of `faer`.

use faer::{Mat, MatRef, Side};

/// Smallest eigenvalue of a symmetric matrix (lower triangle is read).
pub fn min_eigenvalue(m: &Mat<f64>) -> f64 {
    min_eigenvalue_ref(m.as_ref())
}

pub fn min_eigenvalue_ref(m: MatRef<'_, f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    m.selfadjoint_eigenvalues(Side::Lower).into_iter().fold(f64::INFINITY, f64::min)
}

/// True if the smallest eigenvalue is at least `-tol`.
pub fn is_psd(m: &Mat<f64>, tol: f64) -> bool {
    min_eigenvalue(m) >= -tol
}

/// Largest absolute entry.
pub fn max_abs(m: MatRef<'_, f64>) -> f64 {
    let mut best: f64 = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            best = best.max(m.read(i, j).abs());
        }
    }
    best
}

/// `<A, B>` for matrices of equal shape.
pub fn frobenius_dot(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> f64 {
    let mut acc = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            acc += a.read(i, j) * b.read(i, j);
        }
    }
    acc
}

/// Overwrites the strict upper triangle with the lower one.
pub fn symmetrize_from_lower(m: &mut Mat<f64>) {
    for j in 0..m.ncols() {
        for i in 0..j {
            let v = m.read(j, i);
            m.write(i, j, v);
        }
    }
}

/// `(M + Mᵀ) / 2`.
pub fn symmetric_part(m: &Mat<f64>) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| 0.5 * (m.read(i, j) + m.read(j, i)))
}
