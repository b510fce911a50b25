//! Small dense helpers shared by the solvers and the synthetic generator.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Euclidean length of every column.
pub fn column_norms(m: &DMatrix<f64>) -> Vec<f64> {
    m.column_iter().map(|c| c.norm()).collect()
}

/// Copy of `m` with unit-length columns. Zero columns stay zero.
pub fn unit_columns(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for mut c in out.column_iter_mut() {
        let n = c.norm();
        if n > 0.0 {
            c /= n;
        }
    }
    out
}

/// `‖WᵀW − I‖_F`.
pub fn orthogonality_residual(w: &DMatrix<f64>) -> f64 {
    let mut g = w.transpose() * w;
    for i in 0..g.nrows().min(g.ncols()) {
        g[(i, i)] -= 1.0;
    }
    g.norm()
}

/// Matrix with i.i.d. standard normal entries.
pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Haar-distributed random orthogonal matrix: QR of a Gaussian matrix with
/// the signs of `diag(R)` folded into `Q`.
pub fn random_orthogonal<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<f64> {
    let qr = gaussian_matrix(d, d, rng).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Orthogonal polar factor `U Vᵀ` of a square matrix, where `U Σ Vᵀ` is its
/// singular value decomposition.
pub fn polar_orthogonal(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !m.is_square() {
        return Err(Error::InvalidArgument(format!(
            "polar factor needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("SVD input has non-finite entries".into()));
    }
    let svd = m
        .clone()
        .try_svd(true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
    let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else {
        return Err(Error::Numerical("SVD did not return singular vectors".into()));
    };
    Ok(u * v_t)
}
