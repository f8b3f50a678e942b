use super::{AdaptiveFilter, StepOutput};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{axpy, dot, DenseVector};

/// Normalized LMS: `h ← h + μ (d − hᵀu) u / ‖u‖²`.
///
/// A zero regressor leaves `h` unchanged. A regular step costs `3N + 2`
/// multiplications.
pub struct NlmsFilter {
    h: Vec<f64>,
    mu: f64,
}

impl NlmsFilter {
    pub fn new(n: usize, mu: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("N", "must be at least 1"));
        }
        if !(mu > 0.0 && mu < 2.0) {
            return Err(Error::param("lambda", format!("NLMS step {mu} is outside (0, 2)")));
        }
        Ok(Self {
            h: vec![0.0; n],
            mu,
        })
    }

    pub fn with_initial(h0: DenseVector, mu: f64) -> Result<Self> {
        let mut f = Self::new(h0.len(), mu)?;
        f.h = h0.into_vec();
        Ok(f)
    }
}

impl AdaptiveFilter for NlmsFilter {
    fn name(&self) -> String {
        "nlms".to_string()
    }

    fn dim(&self) -> usize {
        self.h.len()
    }

    fn step(&mut self, u: &[f64], d: f64) -> Result<StepOutput> {
        let n = self.h.len();
        check_dim(n, u.len())?;
        let y = dot(&self.h, u);
        let uu = dot(u, u);
        let err = d - y;
        let updated = uu > 0.0 && err != 0.0;
        let mut mults = 2 * n as u64;
        if uu > 0.0 {
            let g = self.mu * err / uu;
            axpy(g, u, &mut self.h);
            mults += 2 + n as u64;
        }
        Ok(StepOutput {
            y,
            updated,
            h_full: self.full_coefficients(),
            mults,
        })
    }

    fn full_coefficients(&self) -> DenseVector {
        DenseVector::from_vec_unchecked(self.h.clone())
    }
}
