use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{check_dim, Error, Result};
use crate::filters::conjugate_gradient;
use crate::linalg::{
    build_krylov_basis, dot, max_abs_diff, norm, project_half_space, r_norm, sub, symmetric_eigenvalues,
    BasisMatrix, DenseVector, HalfSpace, SymMatrix,
};
use crate::tolerances;

use super::theta::PropertySet;

/// The mean-square-error bound of the `D`-dimensional Krylov approximation
/// and the chain of Euclidean bounds that follows from it.
#[derive(Debug, Clone, PartialEq)]
pub struct CgBoundReport {
    pub kappa: f64,
    /// `(√κ − 1)/(√κ + 1)`.
    pub alpha: f64,
    /// `f(P^R_K h*)`.
    pub mse: f64,
    /// `(4α^{2D} − 1)‖h*‖²_R + σ_d²`.
    pub bound: f64,
    /// `‖P_K h* − P^R_K h*‖ ≤ ‖h* − P^R_K h*‖ ≤ λ_min^{−1/2}‖h* − P^R_K h*‖_R
    /// ≤ 2λ_min^{−1/2}‖h*‖_R α^D`, in that order.
    pub chain: [f64; 4],
    /// Scale for the slack tolerance: `σ_d² + ‖h*‖²_R`.
    pub scale: f64,
}

impl CgBoundReport {
    /// Smallest slack among the bound and the three chain links, relative
    /// to the scale of each side.
    pub fn min_slack(&self) -> f64 {
        let mut s = (self.bound - self.mse) / self.scale;
        for w in self.chain.windows(2) {
            s = s.min((w[1] - w[0]) / (1.0 + w[1]));
        }
        s
    }

    pub fn holds(&self) -> bool {
        self.min_slack() >= -tolerances::EXACT
    }
}

/// Checks the CG error bound for `R h = p` with `p = R h*`.
///
/// `P^R_K h*` is the `D`-step conjugate-gradient iterate from zero, i.e. the
/// `R`-norm best approximation of `h*` in `K_D(R, p)`;
/// `f(h) = σ_d² − 2pᵀh + hᵀRh`.
pub fn cg_bound_check(r: &SymMatrix, p: &[f64], h_star: &[f64], d: usize, sigma_d2: f64) -> Result<CgBoundReport> {
    let n = r.dim();
    check_dim(n, p.len())?;
    check_dim(n, h_star.len())?;
    if d == 0 || d > n {
        return Err(Error::param("D", format!("need 1 <= D <= N = {n}, got {d}")));
    }
    let rh = r.matvec(h_star)?;
    let scale_p = 1.0 + norm(p);
    if max_abs_diff(&rh, p) > 1e-9 * scale_p {
        return Err(Error::Inconsistent("p is not R h*".into()));
    }
    let eig = symmetric_eigenvalues(r);
    let (lmin, lmax) = (eig[0], eig[n - 1]);
    if !(lmin > 0.0) {
        return Err(Error::NotPositiveDefinite(lmin));
    }
    let kappa = lmax / lmin;
    let alpha = (kappa.sqrt() - 1.0) / (kappa.sqrt() + 1.0);

    let pr = conjugate_gradient(r, p, &vec![0.0; n], d)?.x;
    let h_r2 = r.quad_form(h_star)?;
    let mse = sigma_d2 - 2.0 * dot(p, &pr) + r.quad_form(&pr)?;
    let bound = (4.0 * alpha.powi(2 * d as i32) - 1.0) * h_r2 + sigma_d2;

    let basis = build_krylov_basis(r, p, d, tolerances::krylov_p_tol(r.trace() / n as f64))?;
    let pk = basis.project(h_star)?;
    let err = sub(h_star, &pr);
    let chain = [
        norm(&sub(&pk, &pr)),
        norm(&err),
        r_norm(&err, r)? / lmin.sqrt(),
        2.0 / lmin.sqrt() * h_r2.max(0.0).sqrt() * alpha.powi(d as i32),
    ];
    Ok(CgBoundReport {
        kappa,
        alpha,
        mse,
        bound,
        chain,
        scale: sigma_d2.abs() + h_r2,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubgradientReport {
    /// Largest `⟨x − y, g̃'(y)⟩ + g̃(y) − g̃(x)` over the samples, relative to
    /// `1 + |g̃(x)|`; nonpositive up to rounding.
    pub max_inequality_violation: f64,
    /// `⟨T(y) − y, g̃'(y)⟩ + g̃(y)` for the subgradient projection `T(y)`;
    /// nonpositive when `T(y)` lies in the separating half-space.
    pub projection_violation: f64,
    /// `T(y) = y` held whenever `g̃(y) ≤ 0`.
    pub noop_when_feasible: bool,
}

impl SubgradientReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.max_inequality_violation <= tol && self.projection_violation <= tol && self.noop_when_feasible
    }
}

/// Checks the subdifferential inequality of the reduced function
/// `g̃(z) = g(S z)` with gradient `2SᵀUe`, and that the subgradient
/// projection of `y` lands in `{x : ⟨x − y, g̃'(y)⟩ + g̃(y) ≤ 0}`.
pub fn subgradient_projection_check<R: Rng>(
    set: &PropertySet,
    rho: f64,
    basis: &BasisMatrix,
    y: &[f64],
    samples: usize,
    rng: &mut R,
) -> Result<SubgradientReport> {
    let dd = basis.rank();
    check_dim(dd, y.len())?;
    let g = |z: &[f64]| -> Result<f64> { Ok(set.value(&basis.lift(z)?, rho)) };
    let gy = g(y)?;
    let grad = basis.project_down(&set.gradient(&basis.lift(y)?))?;
    let spread = 1.0 + norm(y);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..samples {
        let x: Vec<f64> = y.iter().map(|v| v + spread * rng.sample::<f64, _>(StandardNormal)).collect();
        let gx = g(&x)?;
        let lin = dot(&sub(&x, y), &grad) + gy;
        worst = worst.max((lin - gx) / (1.0 + gx.abs()));
    }
    let hs = HalfSpace::new(DenseVector::new(grad.clone())?, gy, DenseVector::new(y.to_vec())?)?;
    let t = project_half_space(y, &hs)?;
    let projection_violation = hs.violation(t.as_slice()) / (1.0 + gy.abs());
    let noop_when_feasible = gy > 0.0 || t.as_slice() == y;
    Ok(SubgradientReport {
        max_inequality_violation: worst,
        projection_violation,
        noop_when_feasible,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_matrix_collapses() {
        let r = SymMatrix::diagonal(&[2.0, 2.0, 2.0]);
        let h = [1.0, -2.0, 0.5];
        let p = r.matvec(&h).unwrap();
        let sigma_n2 = 0.1;
        let sd2 = r.quad_form(&h).unwrap() + sigma_n2;
        let rep = cg_bound_check(&r, &p, &h, 1, sd2).unwrap();
        assert_eq!(rep.alpha, 0.0);
        assert!((rep.mse - sigma_n2).abs() < 1e-12);
        assert!(rep.holds());
    }

    #[test]
    fn rejects_wrong_cross_correlation() {
        let r = SymMatrix::identity(2);
        assert!(cg_bound_check(&r, &[1.0, 0.0], &[0.0, 1.0], 1, 1.0).is_err());
    }
}
