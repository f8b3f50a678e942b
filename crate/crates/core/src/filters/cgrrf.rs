use super::{AdaptiveFilter, StepOutput};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{axpy, dot, DenseVector, SymMatrix};
use crate::stats::{EstimatorMode, StatEstimates};
use crate::tolerances;

/// Outcome of a truncated conjugate-gradient solve.
#[derive(Debug, Clone, PartialEq)]
pub struct CgResult {
    pub x: Vec<f64>,
    /// Iterations actually performed (fewer than requested on breakdown or
    /// exact convergence).
    pub iterations: usize,
    pub mults: u64,
}

/// At most `iters` conjugate-gradient iterations on `A x = b` from `x0`.
///
/// Stops early when the residual vanishes or a search direction has
/// `pᵀAp ≤ 0`, keeping the current iterate.
pub fn conjugate_gradient(a: &SymMatrix, b: &[f64], x0: &[f64], iters: usize) -> Result<CgResult> {
    let n = a.dim();
    check_dim(n, b.len())?;
    check_dim(n, x0.len())?;
    let n64 = n as u64;
    let mut mults = 0u64;
    let mut x = x0.to_vec();
    let mut r = b.to_vec();
    if x0.iter().any(|&v| v != 0.0) {
        let ax = a.matvec(x0)?;
        mults += n64 * n64;
        axpy(-1.0, &ax, &mut r);
    }
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    mults += n64;
    let stop = (tolerances::EXACT * tolerances::EXACT) * dot(b, b);
    let mut ap = vec![0.0; n];
    let mut done = 0;
    while done < iters && rr > stop {
        a.matvec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        mults += n64 * n64 + n64;
        if !(pap > 0.0) {
            break;
        }
        let alpha = rr / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        let rr_next = dot(&r, &r);
        let beta = rr_next / rr;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
        mults += 2 + 4 * n64;
        rr = rr_next;
        done += 1;
    }
    Ok(CgResult {
        x,
        iterations: done,
        mults,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgrrfParams {
    /// Number of CG iterations per solve.
    pub d: usize,
    /// Solve period.
    pub m: u64,
    pub gamma: f64,
    pub mode: EstimatorMode,
    pub warmup: usize,
    /// CG starting vector; `None` means zero.
    pub initial: Option<DenseVector>,
}

impl Default for CgrrfParams {
    fn default() -> Self {
        Self {
            d: 5,
            m: 10,
            gamma: 0.999,
            mode: EstimatorMode::Toeplitz,
            warmup: 1,
            initial: None,
        }
    }
}

/// Conjugate-gradient reduced-rank filter: `D` CG iterations on
/// `R̂ h = p̂` every `m` samples, holding `h` in between.
///
/// `D` CG iterations from zero give the `R̂`-norm best approximation of
/// `R̂⁻¹p̂` in `K_D(R̂, p̂)`. The first solve waits for the same warm-up as
/// the KRR-APSP filter; until then the output is zero.
pub struct CgrrfFilter {
    n: usize,
    params: CgrrfParams,
    est: StatEstimates,
    h: Vec<f64>,
    solved: bool,
    since_solve: u64,
    solves: u64,
}

impl CgrrfFilter {
    pub fn new(n: usize, params: CgrrfParams) -> Result<Self> {
        if params.d == 0 || params.d > n {
            return Err(Error::param("D", format!("need 1 <= D <= N = {n}, got {}", params.d)));
        }
        if params.m == 0 {
            return Err(Error::param("m", "must be at least 1"));
        }
        if let Some(s) = &params.initial {
            check_dim(n, s.len())?;
        }
        let est = StatEstimates::new(params.mode, n, params.gamma)?;
        Ok(Self {
            n,
            params,
            est,
            h: vec![0.0; n],
            solved: false,
            since_solve: 0,
            solves: 0,
        })
    }

    pub fn solves(&self) -> u64 {
        self.solves
    }

    fn solve(&mut self) -> Result<Option<u64>> {
        let r = self.est.r_hat();
        let p = self.est.p_hat();
        let tol = tolerances::krylov_p_tol(r.trace() / self.n as f64);
        if !(crate::linalg::norm(p) > tol) {
            return Ok(None);
        }
        let zero;
        let x0 = match &self.params.initial {
            Some(s) => s.as_slice(),
            None => {
                zero = vec![0.0; self.n];
                &zero
            }
        };
        let out = conjugate_gradient(r, p, x0, self.params.d)?;
        self.h = out.x;
        self.solved = true;
        self.since_solve = 0;
        self.solves += 1;
        Ok(Some(out.mults))
    }
}

impl AdaptiveFilter for CgrrfFilter {
    fn name(&self) -> String {
        format!("cgrrf_D{}", self.params.d)
    }

    fn dim(&self) -> usize {
        self.n
    }

    fn step(&mut self, u: &[f64], d: f64) -> Result<StepOutput> {
        check_dim(self.n, u.len())?;
        let mut mults = self.est.update(u, d)?;
        let y = dot(&self.h, u);
        mults += self.n as u64;
        let due = if self.solved {
            self.since_solve += 1;
            self.since_solve.is_multiple_of(self.params.m)
        } else {
            self.est.is_mature(self.params.warmup)
        };
        let mut updated = false;
        if due {
            if let Some(cost) = self.solve()? {
                mults += cost;
                updated = true;
            }
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
