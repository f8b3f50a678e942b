use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{norm, sub, BasisMatrix, DenseVector};
use crate::tolerances;

/// The basis change operator `Φ_k = S_{k+1} S_kᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiMap {
    pub s_prev: BasisMatrix,
    pub s_next: BasisMatrix,
}

impl PhiMap {
    pub fn new(s_prev: BasisMatrix, s_next: BasisMatrix) -> Result<Self> {
        check_dim(s_prev.dim(), s_next.dim())?;
        check_dim(s_prev.rank(), s_next.rank())?;
        Ok(Self { s_prev, s_next })
    }

    /// `Φ` for a basis that does not change.
    pub fn identity_refresh(s: BasisMatrix) -> Self {
        Self {
            s_prev: s.clone(),
            s_next: s,
        }
    }

    pub fn dim(&self) -> usize {
        self.s_prev.dim()
    }

    /// `S_{k+1}(S_kᵀ x)`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let z = self.s_prev.project_down(x)?;
        self.s_next.lift(&z)
    }

    fn difference(&self) -> DMatrix<f64> {
        self.s_next.to_dmatrix() - self.s_prev.to_dmatrix()
    }

    /// Orthonormal basis of `Fix(Φ) = S_k Fix(S_kᵀS_{k+1})`.
    ///
    /// `Fix(S_kᵀS_{k+1}) = {z̃ : S_{k+1}z̃ = S_k z̃}` is read off the right
    /// singular vectors of `S_{k+1} − S_k` whose singular value is at most
    /// `tol`. Every returned `v = S_k z̃` is then checked against
    /// `‖Φv − v‖ ≤ tol‖v‖` and `‖S_kᵀS_{k+1}z̃ − z̃‖ ≤ tol`.
    pub fn fixed_point_set(&self, tol: f64) -> Result<Vec<DenseVector>> {
        let d = self.s_prev.rank();
        let svd = self.difference().svd(false, true);
        let v_t = svd.v_t.expect("requested");
        let cross = self.s_prev.cross_gram(&self.s_next)?;
        let mut out = Vec::new();
        // The thin SVD of an N × D matrix with N ≥ D returns D singular values.
        for (i, &sigma) in svd.singular_values.iter().enumerate() {
            if sigma > tol {
                continue;
            }
            let z: Vec<f64> = v_t.row(i).iter().copied().collect();
            let v = self.s_prev.lift(&z)?;
            let phi_v = self.apply(&v)?;
            let drift = norm(&sub(&phi_v, &v));
            let zc = DMatrix::from_column_slice(d, 1, &z);
            let gz = &cross * &zc;
            let eig_err = gz.iter().zip(&z).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            if drift > tol * norm(&v) || eig_err > tol {
                return Err(Error::Inconsistent(format!(
                    "fixed-point candidate fails verification: drift {drift:e}, eigen residual {eig_err:e}"
                )));
            }
            out.push(DenseVector::from_vec_unchecked(v));
        }
        Ok(out)
    }

    /// Checks whether `Φ` is 1-attracting nonexpansive (same bases) or
    /// exhibits a witness that it is not (different bases).
    pub fn attracting_check<R: Rng>(&self, trials: usize, rng: &mut R) -> Result<AttractingReport> {
        let n = self.dim();
        let d = self.s_prev.rank();
        let diff = self.difference();
        let gap = diff.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gap <= tolerances::FIXED_POINT_EIG {
            let mut worst: f64 = 0.0;
            for _ in 0..trials {
                let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
                let z: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                let f = self.s_prev.lift(&z)?;
                let phi_x = self.apply(&x)?;
                let lhs = norm(&sub(&x, &phi_x)).powi(2);
                let rhs = norm(&sub(&x, &f)).powi(2) - norm(&sub(&phi_x, &f)).powi(2);
                let scale = 1.0 + norm(&x).powi(2) + norm(&f).powi(2);
                worst = worst.max((lhs - rhs).abs() / scale);
            }
            return Ok(AttractingReport::Attracting {
                trials,
                max_identity_error: worst,
            });
        }
        let svd = diff.svd(false, true);
        let v_t = svd.v_t.expect("requested");
        let (i, &sigma) = svd
            .singular_values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("rank at least one");
        if sigma <= tolerances::FIXED_POINT_EIG {
            return Err(Error::Inconsistent(format!(
                "bases differ by {gap:e} but no direction with S_(k+1)z != S_k z was found"
            )));
        }
        let z: Vec<f64> = v_t.row(i).iter().copied().collect();
        let witness = self.s_prev.lift(&z)?;
        let image = self.apply(&witness)?;
        Ok(AttractingReport::NotAttracting {
            norm_gap: (norm(&image) - norm(&witness)).abs(),
            fixed_point_gap: norm(&sub(&image, &witness)),
            witness: DenseVector::from_vec_unchecked(witness),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AttractingReport {
    /// `‖x − Φx‖² = ‖x − f‖² − ‖Φx − f‖²` held on every trial up to
    /// `max_identity_error` (relative to `1 + ‖x‖² + ‖f‖²`).
    Attracting { trials: usize, max_identity_error: f64 },
    /// `z* = S_k z̃*` with `‖Φz*‖ = ‖z*‖` although `Φz* ≠ z*`: the origin is
    /// a fixed point that `Φ` does not bring `z*` any closer to.
    NotAttracting {
        witness: DenseVector,
        /// `|‖Φz*‖ − ‖z*‖|`, zero up to rounding.
        norm_gap: f64,
        /// `‖Φz* − z*‖`, bounded away from zero.
        fixed_point_gap: f64,
    },
}

/// A basis of `D` orthonormal columns drawn from the Gaussian ensemble.
pub fn random_basis<R: Rng>(n: usize, d: usize, rng: &mut R) -> Result<BasisMatrix> {
    if d == 0 || d > n {
        return Err(Error::param("D", format!("need 1 <= D <= N = {n}, got {d}")));
    }
    loop {
        let vectors: Vec<Vec<f64>> = (0..d)
            .map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect())
            .collect();
        let b = BasisMatrix::orthonormalize(n, &vectors, 0)?;
        if b.rank() == d {
            return Ok(b);
        }
    }
}
