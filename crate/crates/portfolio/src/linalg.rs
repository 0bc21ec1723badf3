use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Eigenvalue floor used when a covariance or inverse Hessian must be made
/// positive definite.
pub const SPD_FLOOR: f64 = 1e-12;

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn is_spd(m: &DMatrix<f64>) -> bool {
    m.is_square()
        && m.iter().all(|v| v.is_finite())
        && m.relative_eq(&m.transpose(), 0.0, 0.0)
        && m.clone().cholesky().is_some()
}

/// Returns `m` unchanged when it is already symmetric positive definite,
/// otherwise the symmetric part with eigenvalues raised to at least `floor`.
pub fn nearest_spd(m: &DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    if is_spd(m) {
        return m.clone();
    }
    let n = m.nrows();
    let sym = symmetrize(&m.map(|v| if v.is_finite() { v } else { 0.0 }));
    let eig = SymmetricEigen::new(sym);
    let vals = eig.eigenvalues.map(|v| v.max(floor));
    let out = &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose();
    let out = symmetrize(&out);
    if out.clone().cholesky().is_some() {
        out
    } else {
        DMatrix::identity(n, n) * floor.max(f64::MIN_POSITIVE)
    }
}

/// Eigendecomposition `C = B diag(d²) Bᵀ` returning `(B, d)` with `d` the
/// square roots of the (floored) eigenvalues.
pub fn sqrt_decomposition(c: &DMatrix<f64>, floor: f64) -> (DMatrix<f64>, DVector<f64>) {
    let eig = SymmetricEigen::new(symmetrize(c));
    let d = eig.eigenvalues.map(|v| v.max(floor).sqrt());
    (eig.eigenvectors, d)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
