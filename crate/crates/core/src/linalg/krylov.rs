use super::{axpy, dot, norm, BasisMatrix, SymMatrix};
use crate::error::{check_dim, Error, Result};
use crate::tolerances;

/// Orthonormal basis of the Krylov subspace `K_D(R, p) = span{p, Rp, …, R^{D−1}p}`.
///
/// Lanczos iteration with full reorthogonalization (classical Gram-Schmidt
/// applied twice against every previous column). When a new direction
/// collapses below [`tolerances::KRYLOV_BREAKDOWN_REL`]`·‖R q_j‖` the Krylov
/// sequence has become linearly dependent and the basis is truncated, so the
/// returned rank may be smaller than `d`.
///
/// Fails with [`Error::DegenerateCrossCorrelation`] when `‖p‖ ≤ tol`.
pub fn build_krylov_basis(r: &SymMatrix, p: &[f64], d: usize, tol: f64) -> Result<BasisMatrix> {
    build_krylov_basis_counted(r, p, d, tol, 0).map(|(b, _)| b)
}

/// [`build_krylov_basis`] that also tags the basis and reports the number of
/// multiplications (divisions included) it performed.
///
/// Without breakdown the count is `(D−1)N² + (2D² + D − 1)N + D`; see
/// [`lanczos_mults`].
pub fn build_krylov_basis_counted(
    r: &SymMatrix,
    p: &[f64],
    d: usize,
    tol: f64,
    build_tag: u64,
) -> Result<(BasisMatrix, u64)> {
    let n = r.dim();
    check_dim(n, p.len())?;
    if d == 0 || d > n {
        return Err(Error::param("D", format!("need 1 <= D <= N = {n}, got {d}")));
    }
    let n64 = n as u64;
    let mut mults = 0u64;

    let p_norm = norm(p);
    mults += n64;
    if !(p_norm > tol) {
        return Err(Error::DegenerateCrossCorrelation(p_norm));
    }
    let inv = 1.0 / p_norm;
    let mut data: Vec<f64> = p.iter().map(|v| v * inv).collect();
    mults += 1 + n64;
    let mut rank = 1;

    let mut w = vec![0.0; n];
    while rank < d {
        let prev = &data[(rank - 1) * n..rank * n];
        r.matvec_into(prev, &mut w);
        let w_norm = norm(&w);
        mults += n64 * n64 + n64;
        for _ in 0..2 {
            for j in 0..rank {
                let c = &data[j * n..(j + 1) * n];
                let coef = dot(c, &w);
                axpy(-coef, c, &mut w);
            }
            mults += 2 * rank as u64 * n64;
        }
        let residual = norm(&w);
        mults += n64;
        if !(residual > tolerances::KRYLOV_BREAKDOWN_REL * w_norm) {
            break;
        }
        let inv = 1.0 / residual;
        data.extend(w.iter().map(|v| v * inv));
        mults += 1 + n64;
        rank += 1;
    }
    Ok((BasisMatrix::from_raw(n, rank, data, build_tag), mults))
}

/// Multiplication count of a Krylov build that reaches full rank `d`.
pub fn lanczos_mults(n: u64, d: u64) -> u64 {
    (d - 1) * n * n + (2 * d * d + d - 1) * n + d
}
