//! Exponentially weighted estimates of the input autocorrelation matrix and
//! the input/desired cross-correlation vector.

use crate::error::{check_dim, Error, Result};
use crate::linalg::{DenseVector, SymMatrix};

/// Storage model for the autocorrelation estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorMode {
    /// Stationary tapped-delay-line input. Only the first row
    /// `r̂ ≈ E{u_k u_k}` is tracked, where the regressor is
    /// `u_k = [u_k, u_{k−1}, …, u_{k−N+1}]` with the newest sample first.
    Toeplitz,
    /// General vector input. The full upper triangle of `R̂` is tracked.
    FullSym,
}

impl EstimatorMode {
    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorMode::Toeplitz => "toeplitz",
            EstimatorMode::FullSym => "fullsym",
        }
    }
}

/// Recursive estimates `R̂_k`, `p̂_k` with forgetting factor `γ`:
///
/// `R̂_{k+1} = γ R̂_k + (outer term)`, `p̂_{k+1} = γ p̂_k + d_k u_k`.
///
/// No `(1 − γ)` normalization is applied; Krylov subspaces and Wiener
/// solutions are invariant to a common positive scale.
#[derive(Debug, Clone)]
pub struct StatEstimates {
    mode: EstimatorMode,
    gamma: f64,
    r: SymMatrix,
    p: Vec<f64>,
    count: u64,
}

impl StatEstimates {
    /// Zero estimates `R̂₀ = O`, `p̂₀ = 0`.
    pub fn new(mode: EstimatorMode, n: usize, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::param("gamma", format!("{gamma} is outside (0, 1)")));
        }
        if n == 0 {
            return Err(Error::param("N", "must be at least 1"));
        }
        let r = match mode {
            EstimatorMode::Toeplitz => SymMatrix::toeplitz(vec![0.0; n])?,
            EstimatorMode::FullSym => SymMatrix::zeros(n),
        };
        Ok(Self {
            mode,
            gamma,
            r,
            p: vec![0.0; n],
            count: 0,
        })
    }

    pub fn mode(&self) -> EstimatorMode {
        self.mode
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn dim(&self) -> usize {
        self.p.len()
    }

    pub fn sample_count(&self) -> u64 {
        self.count
    }

    /// True once at least `N · warmup_factor` samples have been absorbed.
    pub fn is_mature(&self, warmup_factor: usize) -> bool {
        self.count >= (self.dim() * warmup_factor) as u64
    }

    /// Absorbs one sample and returns the number of multiplications used.
    ///
    /// Toeplitz mode costs `4N`; full mode costs `N(N+1) + 2N`.
    pub fn update(&mut self, u: &[f64], d: f64) -> Result<u64> {
        let n = self.dim();
        check_dim(n, u.len())?;
        if let Some(i) = u.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        if !d.is_finite() {
            return Err(Error::NonFinite(n));
        }
        let g = self.gamma;
        let mults = match self.mode {
            EstimatorMode::Toeplitz => {
                let newest = u[0];
                let row = self.r.toeplitz_mut().expect("toeplitz storage");
                for (rj, &uj) in row.iter_mut().zip(u) {
                    *rj = g * *rj + newest * uj;
                }
                2 * n as u64
            }
            EstimatorMode::FullSym => {
                let packed = self.r.packed_mut().expect("packed storage");
                let mut k = 0;
                for i in 0..n {
                    for j in i..n {
                        packed[k] = g * packed[k] + u[i] * u[j];
                        k += 1;
                    }
                }
                (n * (n + 1)) as u64
            }
        };
        for (pj, &uj) in self.p.iter_mut().zip(u) {
            *pj = g * *pj + d * uj;
        }
        self.count += 1;
        Ok(mults + 2 * n as u64)
    }

    /// Borrow of the current `R̂` (Toeplitz-structured in Toeplitz mode).
    pub fn r_hat(&self) -> &SymMatrix {
        &self.r
    }

    /// Borrow of the current `p̂`.
    pub fn p_hat(&self) -> &[f64] {
        &self.p
    }

    /// Copy of `R̂` as a dense symmetric matrix.
    pub fn snapshot_r(&self) -> SymMatrix {
        self.r.to_dense()
    }

    pub fn snapshot_p(&self) -> DenseVector {
        DenseVector::from_vec_unchecked(self.p.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_is_zero() {
        let e = StatEstimates::new(EstimatorMode::Toeplitz, 4, 0.999).unwrap();
        assert_eq!(e.r_hat().first_row().unwrap(), &[0.0; 4]);
        assert_eq!(e.p_hat(), &[0.0; 4]);
        assert_eq!(e.sample_count(), 0);
        let f = StatEstimates::new(EstimatorMode::FullSym, 2, 0.5).unwrap();
        assert_eq!(f.snapshot_r().to_rows(), vec![vec![0.0; 2]; 2]);
    }

    #[test]
    fn gamma_must_be_inside_unit_interval() {
        for g in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(StatEstimates::new(EstimatorMode::Toeplitz, 3, g).is_err());
        }
    }

    #[test]
    fn single_sample_algebra() {
        let mut e = StatEstimates::new(EstimatorMode::Toeplitz, 3, 0.9).unwrap();
        assert_eq!(e.update(&[1.0, 0.0, 0.0], 2.0).unwrap(), 12);
        assert_eq!(e.r_hat().first_row().unwrap(), &[1.0, 0.0, 0.0]);
        assert_eq!(e.p_hat(), &[2.0, 0.0, 0.0]);

        let mut f = StatEstimates::new(EstimatorMode::FullSym, 2, 0.9).unwrap();
        f.update(&[1.0, 1.0], 0.0).unwrap();
        assert_eq!(f.snapshot_r().to_rows(), vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
        assert_eq!(f.p_hat(), &[0.0, 0.0]);
    }

    #[test]
    fn snapshot_expands_toeplitz() {
        let mut e = StatEstimates::new(EstimatorMode::Toeplitz, 3, 0.5).unwrap();
        e.r.toeplitz_mut().unwrap().copy_from_slice(&[2.0, 1.0, 0.0]);
        assert_eq!(
            e.snapshot_r().to_rows(),
            vec![
                vec![2.0, 1.0, 0.0],
                vec![1.0, 2.0, 1.0],
                vec![0.0, 1.0, 2.0]
            ]
        );
    }

    #[test]
    fn dimension_mismatch() {
        let mut e = StatEstimates::new(EstimatorMode::FullSym, 3, 0.5).unwrap();
        assert!(matches!(
            e.update(&[1.0], 0.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
