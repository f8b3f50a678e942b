use super::{AdaptiveFilter, StepOutput};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{dot, DenseVector};

/// Exponentially weighted recursive least squares.
///
/// Written as the textbook recursion so the per-step count is exactly
/// `4N² + 4N + 1`:
///
/// ```text
/// π = P u
/// k = π / (λ + uᵀπ)
/// ξ = d − wᵀu
/// w ← w + k ξ
/// P ← λ⁻¹P − λ⁻¹ k πᵀ
/// ```
///
/// `P` starts at `δ⁻¹ I`.
pub struct RlsFilter {
    n: usize,
    w: Vec<f64>,
    /// Full row-major `N × N` inverse correlation matrix.
    p: Vec<f64>,
    lambda: f64,
    inv_lambda: f64,
    pi: Vec<f64>,
    k: Vec<f64>,
}

impl RlsFilter {
    pub fn new(n: usize, lambda: f64, delta: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("N", "must be at least 1"));
        }
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::param("lambda", format!("RLS forgetting factor {lambda} is outside (0, 1]")));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::param("delta", "RLS regularization must be positive"));
        }
        let mut p = vec![0.0; n * n];
        for i in 0..n {
            p[i * n + i] = 1.0 / delta;
        }
        Ok(Self {
            n,
            w: vec![0.0; n],
            p,
            lambda,
            inv_lambda: 1.0 / lambda,
            pi: vec![0.0; n],
            k: vec![0.0; n],
        })
    }
}

impl AdaptiveFilter for RlsFilter {
    fn name(&self) -> String {
        "rls".to_string()
    }

    fn dim(&self) -> usize {
        self.n
    }

    fn step(&mut self, u: &[f64], d: f64) -> Result<StepOutput> {
        let n = self.n;
        check_dim(n, u.len())?;
        let n64 = n as u64;
        let mut mults = 0u64;
        for (i, pi) in self.pi.iter_mut().enumerate() {
            *pi = dot(&self.p[i * n..(i + 1) * n], u);
        }
        mults += n64 * n64;
        let denom = self.lambda + dot(u, &self.pi);
        let g = 1.0 / denom;
        for (ki, pi) in self.k.iter_mut().zip(&self.pi) {
            *ki = pi * g;
        }
        mults += 2 * n64 + 1;
        let y = dot(&self.w, u);
        let xi = d - y;
        for (wi, ki) in self.w.iter_mut().zip(&self.k) {
            *wi += ki * xi;
        }
        mults += 2 * n64;
        let il = self.inv_lambda;
        for i in 0..n {
            let ki = self.k[i];
            let row = &mut self.p[i * n..(i + 1) * n];
            for (pij, pj) in row.iter_mut().zip(&self.pi) {
                *pij = il * *pij - il * (ki * pj);
            }
        }
        mults += 3 * n64 * n64;
        Ok(StepOutput {
            y,
            updated: true,
            h_full: self.full_coefficients(),
            mults,
        })
    }

    fn full_coefficients(&self) -> DenseVector {
        DenseVector::from_vec_unchecked(self.w.clone())
    }
}
