//! Small dense linear-algebra helpers over nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Ceiling that ignores representation error just above an integer.
pub fn ceil_tol(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-12 * x.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

/// ⌈log₂ x⌉ for x ≥ 1, with the same tolerance; 0 for x ≤ 1.
pub fn ceil_log2(x: f64) -> u32 {
    if x <= 1.0 {
        0
    } else {
        ceil_tol(x.log2()) as u32
    }
}

/// Exact ⌈log₂ n⌉ for integers.
pub fn ceil_log2_u64(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}

/// Largest |A − A†| entry.
pub fn hermitian_deviation(a: &CMatrix) -> f64 {
    let mut dev = 0.0f64;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            dev = dev.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Hermitian eigendecomposition with eigenvalues in ascending order.
pub fn eigh(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = a.nrows();
    let m = faer::Mat::<Complex64>::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)].conj()));
    let evd = m.self_adjoint_eigen(faer::Side::Lower).expect("self-adjoint eigensolver failed");
    let values = (0..n).map(|k| evd.S()[k].re).collect();
    let u = evd.U();
    (values, CMatrix::from_fn(n, n, |i, j| u[(i, j)]))
}

/// Real symmetric eigendecomposition, ascending.
pub fn eigh_real(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let m = faer::Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
    let evd = m.self_adjoint_eigen(faer::Side::Lower).expect("self-adjoint eigensolver failed");
    let values = (0..n).map(|k| evd.S()[k]).collect();
    let u = evd.U();
    (values, DMatrix::from_fn(n, n, |i, j| u[(i, j)]))
}

/// e^{−iAt} for Hermitian A.
pub fn expm_hermitian(a: &CMatrix, t: f64) -> CMatrix {
    let (vals, vecs) = eigh(a);
    let phases = CVector::from_iterator(vals.len(), vals.iter().map(|&e| (-I * e * t).exp()));
    let scaled = CMatrix::from_fn(vecs.nrows(), vecs.ncols(), |i, j| vecs[(i, j)] * phases[j]);
    scaled * vecs.adjoint()
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Eigenvalues and unit eigenvectors of a unitary (hence normal) matrix.
pub fn eig_unitary(u: &CMatrix) -> (Vec<Complex64>, CMatrix) {
    let n = u.nrows();
    let m = faer::Mat::<Complex64>::from_fn(n, n, |i, j| u[(i, j)]);
    let evd = m.eigen().expect("eigensolver failed");
    let values = (0..n).map(|k| evd.S()[k]).collect();
    let v = evd.U();
    let mut vecs = CMatrix::from_fn(n, n, |i, j| v[(i, j)]);
    for mut c in vecs.column_iter_mut() {
        let norm = c.norm();
        c /= Complex64::from(norm);
    }
    (values, vecs)
}

pub fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}
