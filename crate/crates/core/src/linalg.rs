//! Small dense helpers shared by the array model and the solver.

use nalgebra::{DMatrix, Matrix3, SymmetricEigen};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

/// Largest eigenvalue of a real symmetric 3×3 matrix.
///
/// Closed-form trigonometric solution of the characteristic cubic; falls back
/// to a symmetric QR decomposition when the closed form is not finite.
pub fn sym3_max_eigenvalue(a: &Matrix3<f64>) -> f64 {
    let p1 = a[(0, 1)].powi(2) + a[(0, 2)].powi(2) + a[(1, 2)].powi(2);
    let q = a.trace() / 3.0;
    if p1 == 0.0 {
        return a[(0, 0)].max(a[(1, 1)]).max(a[(2, 2)]);
    }
    let p2 = (a[(0, 0)] - q).powi(2) + (a[(1, 1)] - q).powi(2) + (a[(2, 2)] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let b = (a - Matrix3::identity() * q) / p;
    let r = (b.determinant() / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let lambda = q + 2.0 * p * phi.cos();
    if lambda.is_finite() {
        lambda
    } else {
        SymmetricEigen::new(*a).eigenvalues.max()
    }
}

/// Smallest eigenvalue of a real symmetric 3×3 matrix.
pub fn sym3_min_eigenvalue(a: &Matrix3<f64>) -> f64 {
    -sym3_max_eigenvalue(&(-a))
}

/// `‖A‖_F²` for a complex matrix.
pub fn frobenius_sq(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// `tr(Dᴴ·G·D)`, i.e. `‖A·D‖_F²` when `G = AᴴA`.
pub fn gram_power(gram: &CMatrix, d: &CMatrix) -> f64 {
    let gd = gram * d;
    d.iter().zip(gd.iter()).map(|(a, b)| (a.conj() * b).re).sum()
}
