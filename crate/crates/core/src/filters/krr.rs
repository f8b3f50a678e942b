use std::collections::VecDeque;

use super::apsp::{Accumulator, ProjectionSet};
use super::{AdaptiveFilter, StepOutput};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{build_krylov_basis_counted, dot, BasisMatrix, DenseVector};
use crate::stats::{EstimatorMode, StatEstimates};
use crate::tolerances;

/// Parameters of the Krylov reduced-rank APSP filter.
#[derive(Debug, Clone, PartialEq)]
pub struct KrrParams {
    /// Requested rank `D`.
    pub d: usize,
    /// Number of parallel projections `q = |I_k|`, with
    /// `I_k = {k, k−1, …, k−q+1}`.
    pub q: usize,
    /// Columns per data matrix `U_ι = [u_ι, …, u_{ι−r+1}]`.
    pub r: usize,
    /// Error bound `ρ ≥ 0`.
    pub rho: f64,
    /// Basis refresh period `m ≥ 1`.
    pub m: u64,
    /// Relaxation `λ ∈ [0, 2]`.
    pub lambda: f64,
    /// Weights for `ι = k, k−1, …`; `None` means uniform `1/q`.
    pub weights: Option<Vec<f64>>,
    /// Forgetting factor of the correlation estimates.
    pub gamma: f64,
    pub mode: EstimatorMode,
    /// The first basis is built once `N · warmup` samples have been seen.
    pub warmup: usize,
}

impl Default for KrrParams {
    fn default() -> Self {
        Self {
            d: 5,
            q: 4,
            r: 1,
            rho: 0.15,
            m: 10,
            lambda: 0.03,
            weights: None,
            gamma: 0.999,
            mode: EstimatorMode::Toeplitz,
            warmup: 1,
        }
    }
}

impl KrrParams {
    pub fn weights(&self) -> Vec<f64> {
        match &self.weights {
            Some(w) => w.clone(),
            None => vec![1.0 / self.q as f64; self.q],
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.d == 0 || self.d > n {
            return Err(Error::param("D", format!("need 1 <= D <= N = {n}, got {}", self.d)));
        }
        if self.q == 0 {
            return Err(Error::param("q", "must be at least 1"));
        }
        if self.r == 0 {
            return Err(Error::param("r", "must be at least 1"));
        }
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return Err(Error::param("rho", format!("{} is not a finite nonnegative number", self.rho)));
        }
        if self.m == 0 {
            return Err(Error::param("m", "must be at least 1"));
        }
        if !(0.0..=2.0).contains(&self.lambda) {
            return Err(Error::param("lambda", format!("{} is outside [0, 2]", self.lambda)));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::param("gamma", format!("{} is outside (0, 1)", self.gamma)));
        }
        if let Some(w) = &self.weights {
            if w.len() != self.q {
                return Err(Error::param("weights", format!("need {} weights, got {}", self.q, w.len())));
            }
            if w.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                return Err(Error::param("weights", "weights must be positive"));
            }
            let sum: f64 = w.iter().sum();
            if (sum - 1.0).abs() > tolerances::EXACT {
                return Err(Error::param("weights", format!("weights sum to {sum}, not 1")));
            }
        }
        Ok(())
    }
}

/// Initial reduced vector, applied when the first basis is installed.
#[derive(Debug, Clone, PartialEq)]
pub enum H0Mode {
    Zero,
    /// `h̃ = S₁ᵀ s` for the given full-length `s`.
    Vector(DenseVector),
}

/// Multiplications of one step split by purpose.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MultBreakdown {
    /// Correlation estimate update.
    pub estimator: u64,
    /// Krylov basis construction and re-expression of `h̃` in a new basis.
    pub basis: u64,
    /// Filter output and coefficient update, including `S_kᵀu` products.
    pub filter: u64,
}

impl MultBreakdown {
    pub fn total(&self) -> u64 {
        self.estimator + self.basis + self.filter
    }
}

/// Running counters of a KRR-APSP filter.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KrrDiagnostics {
    pub steps: u64,
    /// Steps on which some `‖e_ι‖² > ρ`.
    pub updates: u64,
    /// Violated sets skipped because `U_ι e = 0`.
    pub skipped_sets: u64,
    /// Steps whose weighted directions cancelled exactly.
    pub cancellations: u64,
    /// Successful basis builds, the first one included.
    pub builds: u64,
    /// Scheduled builds abandoned because `p̂` was degenerate.
    pub failed_builds: u64,
    /// Smallest `M_k` seen on a moving step.
    pub min_relaxation: Option<f64>,
}

/// Details of the most recent step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KrrStepInfo {
    pub relaxation: Option<f64>,
    pub mults: MultBreakdown,
    /// A basis was installed or refreshed at the end of the step.
    pub rebuilt: bool,
    /// Filled only while recording is enabled: the reduced vector and basis
    /// the update started from, and the property sets it used.
    pub h_tilde_before: Vec<f64>,
    pub basis_before: Option<BasisMatrix>,
    pub sets: Vec<ProjectionSet>,
    /// Full-length `(u_j, d_j)` pairs, newest first; set `i` of `sets` uses
    /// entries `i, i+1, …` in the same order as its reduced columns.
    pub regressors: Vec<(Vec<f64>, f64)>,
}

struct Entry {
    u: Vec<f64>,
    d: f64,
    reduced: Vec<f64>,
    epoch: Option<u64>,
}

/// Krylov reduced-rank adaptive parallel subgradient projection filter.
///
/// Coefficients live in a `D`-dimensional subspace spanned by the columns of
/// `S_k`, an orthonormal basis of `K_D(R̂_k, p̂_k)`. Before the first basis
/// exists the filter outputs zero and does not adapt.
pub struct KrrFilter {
    n: usize,
    params: KrrParams,
    weights: Vec<f64>,
    h0: H0Mode,
    est: StatEstimates,
    basis: Option<BasisMatrix>,
    h_tilde: Vec<f64>,
    ring: VecDeque<Entry>,
    epoch: u64,
    since_install: u64,
    diag: KrrDiagnostics,
    flags: Vec<bool>,
    last: KrrStepInfo,
    recording: bool,
}

impl KrrFilter {
    pub fn new(n: usize, params: KrrParams, h0: H0Mode) -> Result<Self> {
        params.validate(n)?;
        if let H0Mode::Vector(s) = &h0 {
            check_dim(n, s.len())?;
        }
        let est = StatEstimates::new(params.mode, n, params.gamma)?;
        Ok(Self {
            n,
            weights: params.weights(),
            ring: VecDeque::with_capacity(params.q + params.r),
            params,
            h0,
            est,
            basis: None,
            h_tilde: Vec::new(),
            epoch: 0,
            since_install: 0,
            diag: KrrDiagnostics::default(),
            flags: Vec::new(),
            last: KrrStepInfo::default(),
            recording: false,
        })
    }

    pub fn params(&self) -> &KrrParams {
        &self.params
    }

    pub fn basis(&self) -> Option<&BasisMatrix> {
        self.basis.as_ref()
    }

    pub fn h_tilde(&self) -> &[f64] {
        &self.h_tilde
    }

    pub fn estimates(&self) -> &StatEstimates {
        &self.est
    }

    pub fn diagnostics(&self) -> &KrrDiagnostics {
        &self.diag
    }

    /// One flag per step: whether some property set was violated.
    pub fn update_flags(&self) -> &[bool] {
        &self.flags
    }

    pub fn last_step(&self) -> &KrrStepInfo {
        &self.last
    }

    /// Keep the inputs of each update in [`KrrStepInfo`].
    pub fn set_recording(&mut self, on: bool) {
        self.recording = on;
    }

    /// Installs `new_basis` as `S_{k+1}` and re-expresses the filter in it:
    /// `h̃ ← S_{k+1}ᵀ S_k h̃`. With no current basis, `h̃` is initialized from
    /// the configured initial vector instead. Restarts the refresh schedule.
    pub fn rebase(&mut self, new_basis: BasisMatrix) -> Result<()> {
        check_dim(self.n, new_basis.dim())?;
        self.install(new_basis);
        Ok(())
    }

    fn install(&mut self, new_basis: BasisMatrix) -> u64 {
        let n = self.n as u64;
        let mut mults = 0;
        self.h_tilde = match (&self.basis, &self.h0) {
            (Some(old), _) => {
                let full = old.lift(&self.h_tilde).expect("rank matches h_tilde");
                mults += (old.rank() + new_basis.rank()) as u64 * n;
                new_basis.project_down(&full).expect("same ambient dimension")
            }
            (None, H0Mode::Zero) => vec![0.0; new_basis.rank()],
            (None, H0Mode::Vector(s)) => {
                mults += new_basis.rank() as u64 * n;
                new_basis.project_down(s).expect("same ambient dimension")
            }
        };
        self.basis = Some(new_basis);
        self.epoch += 1;
        self.since_install = 0;
        self.diag.builds += 1;
        mults
    }

    /// Builds `S_{k+1}` from the current estimates; `None` when `p̂` is
    /// degenerate.
    fn try_build(&mut self) -> Result<Option<(BasisMatrix, u64)>> {
        let r = self.est.r_hat();
        let scale = r.trace() / self.n as f64;
        let tol = tolerances::krylov_p_tol(scale);
        match build_krylov_basis_counted(r, self.est.p_hat(), self.params.d, tol, self.est.sample_count()) {
            Ok(built) => Ok(Some(built)),
            Err(Error::DegenerateCrossCorrelation(_)) => Ok(None),
            Err(e) => Err(e),
        }
    }

    fn adapt(&mut self, mb: &mut MultBreakdown) -> (f64, bool) {
        let basis = self.basis.as_ref().expect("adapt needs a basis");
        let dd = basis.rank();
        let dn = (dd * self.n) as u64;
        for entry in self.ring.iter_mut() {
            if entry.epoch != Some(self.epoch) {
                entry.reduced = basis.project_down(&entry.u).expect("dimension checked");
                entry.epoch = Some(self.epoch);
                mb.filter += dn;
            }
        }
        let z: Vec<f64> = self.ring.iter().map(|e| dot(&e.reduced, &self.h_tilde)).collect();
        mb.filter += (z.len() * dd) as u64;
        let y = z[0];

        let available = self.ring.len();
        let r_eff = self.params.r.min(available);
        let q_eff = self.params.q.min(available + 1 - r_eff);
        let w_sum: f64 = if q_eff < self.params.q {
            self.weights[..q_eff].iter().sum()
        } else {
            1.0
        };

        if self.recording {
            self.last.h_tilde_before = self.h_tilde.clone();
            self.last.basis_before = Some(basis.clone());
            self.last.sets.clear();
            self.last.regressors = self.ring.iter().map(|e| (e.u.clone(), e.d)).collect();
        }
        let mut acc = Accumulator::new(dd);
        let mut e = vec![0.0; r_eff];
        for j in 0..q_eff {
            for (i, ei) in e.iter_mut().enumerate() {
                *ei = z[j + i] - self.ring[j + i].d;
            }
            let w = self.weights[j] / w_sum;
            let cols = (j..j + r_eff).map(|i| self.ring[i].reduced.as_slice());
            acc.absorb(&e, cols, w, self.params.rho);
            if self.recording {
                self.last.sets.push(ProjectionSet {
                    columns: (j..j + r_eff).map(|i| self.ring[i].reduced.clone()).collect(),
                    targets: (j..j + r_eff).map(|i| self.ring[i].d).collect(),
                    weight: w,
                });
            }
        }
        let (relaxation, cancelled) = acc.apply(&mut self.h_tilde, self.params.lambda);
        mb.filter += acc.mults;
        self.diag.skipped_sets += acc.skipped as u64;
        if cancelled {
            self.diag.cancellations += 1;
        }
        if let Some(m) = relaxation {
            self.diag.min_relaxation = Some(self.diag.min_relaxation.map_or(m, |x| x.min(m)));
        }
        self.last.relaxation = relaxation;
        (y, acc.fired)
    }
}

impl AdaptiveFilter for KrrFilter {
    fn name(&self) -> String {
        format!("krr_D{}_q{}", self.params.d, self.params.q)
    }

    fn dim(&self) -> usize {
        self.n
    }

    fn step(&mut self, u: &[f64], d: f64) -> Result<StepOutput> {
        check_dim(self.n, u.len())?;
        let mut mb = MultBreakdown {
            estimator: self.est.update(u, d)?,
            ..Default::default()
        };
        let cap = self.params.q + self.params.r - 1;
        self.ring.push_front(Entry {
            u: u.to_vec(),
            d,
            reduced: Vec::new(),
            epoch: None,
        });
        self.ring.truncate(cap);
        self.last.relaxation = None;
        self.last.rebuilt = false;

        let (y, fired) = if self.basis.is_some() {
            self.adapt(&mut mb)
        } else {
            (0.0, false)
        };

        let due = match self.basis {
            None => self.est.is_mature(self.params.warmup),
            Some(_) => {
                self.since_install += 1;
                self.since_install.is_multiple_of(self.params.m)
            }
        };
        if due {
            match self.try_build()? {
                Some((basis, cost)) => {
                    mb.basis += cost;
                    mb.basis += self.install(basis);
                    self.last.rebuilt = true;
                }
                None => {
                    if self.basis.is_some() {
                        self.diag.failed_builds += 1;
                    }
                }
            }
        }

        self.diag.steps += 1;
        if fired {
            self.diag.updates += 1;
        }
        self.flags.push(fired);
        self.last.mults = mb;
        Ok(StepOutput {
            y,
            updated: fired,
            h_full: self.full_coefficients(),
            mults: mb.total(),
        })
    }

    fn full_coefficients(&self) -> DenseVector {
        match &self.basis {
            Some(b) => DenseVector::from_vec_unchecked(b.lift(&self.h_tilde).expect("rank matches")),
            None => DenseVector::zeros(self.n),
        }
    }
}
