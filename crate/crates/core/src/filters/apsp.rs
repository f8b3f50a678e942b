//! The reduced-dimension parallel subgradient projection update.

use crate::error::{check_dim, Error, Result};
use crate::linalg::{axpy, dot};
use crate::tolerances;

/// One property set `{h̃ : ‖U_ιᵀh̃ − d_ι‖² ≤ ρ}` in the reduced space.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionSet {
    /// The `r` columns of `U_ι^{(k)} = S_kᵀU_ι`, each of length `D`.
    pub columns: Vec<Vec<f64>>,
    /// The `r` desired responses `d_ι`.
    pub targets: Vec<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApspOutcome {
    pub h_next: Vec<f64>,
    /// Some set was violated (`‖e_ι‖² > ρ`).
    pub fired: bool,
    /// `M_k` when the coefficients moved.
    pub relaxation: Option<f64>,
    /// Violated sets with a zero subgradient (`U_ι e = 0`), which cannot be
    /// projected onto and are left out.
    pub skipped: usize,
    /// The weighted directions cancelled exactly, so no move was made.
    pub cancelled: bool,
    pub mults: u64,
}

/// Running sums of `δ̃_ι` and `ℓ_ι` across the sets of one step.
pub(crate) struct Accumulator {
    pub f: Vec<f64>,
    pub ell: f64,
    pub fired: bool,
    pub skipped: usize,
    pub mults: u64,
    a: Vec<f64>,
}

impl Accumulator {
    pub fn new(d: usize) -> Self {
        Self {
            f: vec![0.0; d],
            ell: 0.0,
            fired: false,
            skipped: 0,
            mults: 0,
            a: vec![0.0; d],
        }
    }

    /// Absorbs one set given its error vector `e = U_ιᵀh̃ − d_ι` and the
    /// columns of `U_ι`.
    pub fn absorb<'c>(
        &mut self,
        e: &[f64],
        columns: impl Iterator<Item = &'c [f64]>,
        weight: f64,
        rho: f64,
    ) {
        let dd = self.f.len() as u64;
        let r = e.len() as u64;
        let e_sq = dot(e, e);
        self.mults += r;
        if e_sq <= rho {
            return;
        }
        self.fired = true;
        self.a.iter_mut().for_each(|v| *v = 0.0);
        for (col, &ei) in columns.zip(e) {
            axpy(ei, col, &mut self.a);
        }
        let c = dot(&self.a, &self.a);
        self.mults += r * dd + dd;
        if c == 0.0 {
            self.skipped += 1;
            return;
        }
        let ds = rho - e_sq;
        let wd = weight * ds;
        let coef = wd / (2.0 * c);
        axpy(coef, &self.a, &mut self.f);
        self.ell += weight * (ds * ds) / (4.0 * c);
        self.mults += 3 + dd + 4;
    }

    /// Applies `h̃ ← h̃ + λ M_k f̃` when some set fired. Returns `M_k` when
    /// the coefficients moved and whether the directions cancelled.
    pub fn apply(&mut self, h: &mut [f64], lambda: f64) -> (Option<f64>, bool) {
        if !self.fired || self.ell == 0.0 {
            return (None, false);
        }
        let f_sq = dot(&self.f, &self.f);
        self.mults += self.f.len() as u64;
        if f_sq <= (tolerances::CANCELLATION_REL * tolerances::CANCELLATION_REL) * self.ell {
            return (None, true);
        }
        let m = self.ell / f_sq;
        let step = lambda * m;
        axpy(step, &self.f, h);
        self.mults += 2 + self.f.len() as u64;
        (Some(m), false)
    }
}

/// One parallel subgradient projection step in the reduced space:
///
/// for every set compute `e = U_ιᵀh̃ − d_ι`; violated sets contribute
/// `δ̃_ι = w (ρ − ‖e‖²) a/(2c)` and `ℓ_ι = w (ρ − ‖e‖²)²/(4c)` with
/// `a = U_ι e`, `c = ‖a‖²`; then `h̃ ← h̃ + λ M f̃` where `f̃ = Σδ̃`,
/// `M = Σℓ/‖f̃‖²`.
pub fn apsp_update(
    h: &[f64],
    sets: &[ProjectionSet],
    rho: f64,
    lambda: f64,
) -> Result<ApspOutcome> {
    if !(rho >= 0.0) {
        return Err(Error::param("rho", "must be nonnegative"));
    }
    let d = h.len();
    let mut acc = Accumulator::new(d);
    for set in sets {
        check_dim(set.columns.len(), set.targets.len())?;
        let mut e = Vec::with_capacity(set.columns.len());
        for (col, &t) in set.columns.iter().zip(&set.targets) {
            check_dim(d, col.len())?;
            e.push(dot(col, h) - t);
        }
        acc.mults += (set.columns.len() * d) as u64;
        acc.absorb(&e, set.columns.iter().map(|c| c.as_slice()), set.weight, rho);
    }
    let mut h_next = h.to_vec();
    let (relaxation, cancelled) = acc.apply(&mut h_next, lambda);
    Ok(ApspOutcome {
        h_next,
        fired: acc.fired,
        relaxation,
        skipped: acc.skipped,
        cancelled,
        mults: acc.mults,
    })
}
