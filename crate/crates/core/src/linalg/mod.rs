//! Dense real linear algebra: symmetric and Toeplitz matrices, energy-norm
//! geometry, Krylov bases, and projections onto half-spaces and subspaces.

mod basis;
mod halfspace;
mod krylov;
mod sym;
mod vector;

pub use basis::BasisMatrix;
pub use halfspace::HalfSpace;
pub use krylov::{build_krylov_basis, build_krylov_basis_counted, lanczos_mults};
pub use sym::SymMatrix;
pub use vector::{axpy, dot, max_abs_diff, norm, scale, sub, DenseVector};

use nalgebra::SymmetricEigen;

use crate::error::{check_dim, Error, Result};
use crate::tolerances;

/// Energy norm `‖x‖_R = sqrt(xᵀ R x)`.
///
/// Rejects `R` as non-PSD when the quadratic form is below
/// `−`[`tolerances::PSD_NEGATIVE_SLACK`]; small negative round-off is
/// clamped to zero.
pub fn r_norm(x: &[f64], r: &SymMatrix) -> Result<f64> {
    let q = r.quad_form(x)?;
    if q < -tolerances::PSD_NEGATIVE_SLACK {
        return Err(Error::NotPositiveSemidefinite(q));
    }
    Ok(q.max(0.0).sqrt())
}

/// Projection onto a closed half-space (the subgradient projection step).
///
/// Points inside are returned unchanged. Otherwise the result is
/// `x − (violation/‖normal‖²)·normal`, which lies on the boundary.
pub fn project_half_space(x: &[f64], h: &HalfSpace) -> Result<DenseVector> {
    check_dim(h.dim(), x.len())?;
    let v = h.violation(x);
    if v <= 0.0 {
        return DenseVector::new(x.to_vec());
    }
    let nn = h.normal.norm_sq();
    if nn == 0.0 {
        return Err(Error::InconsistentHalfSpace(v));
    }
    let mut out = x.to_vec();
    axpy(-v / nn, &h.normal, &mut out);
    DenseVector::new(out)
}

/// Orthogonal projection `S Sᵀ x` onto the range of `S`.
pub fn project_subspace(x: &[f64], s: &BasisMatrix) -> Result<DenseVector> {
    let out = s.project(x)?;
    Ok(DenseVector::from_vec_unchecked(out))
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn symmetric_eigenvalues(r: &SymMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(r.to_dmatrix()).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Spectral condition number `λ_max / λ_min` of a symmetric positive
/// definite matrix.
pub fn condition_number(r: &SymMatrix) -> Result<f64> {
    let ev = symmetric_eigenvalues(r);
    let (lo, hi) = match (ev.first(), ev.last()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => return Err(Error::param("R", "empty matrix")),
    };
    if lo <= 0.0 {
        return Err(Error::NotPositiveDefinite(lo));
    }
    Ok(hi / lo)
}
