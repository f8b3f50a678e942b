use crate::error::{check_dim, Error, Result};
use crate::filters::{AdaptiveFilter, H0Mode, KrrFilter, KrrParams};
use crate::linalg::{axpy, dot, norm, sub, DenseVector};
use crate::scenarios::{SysIdConfig, SysIdScenario};
use crate::stats::EstimatorMode;
use crate::tolerances;

use super::theta::ThetaInstance;

/// A point of `∩_ι H⁻_ι ∩ R(S)` found by cyclic projections in the reduced
/// coordinates, or `None` when none was certified.
///
/// The half-spaces are tightened by a small margin so that the returned
/// point satisfies every original constraint with a nonpositive violation.
pub fn feasible_point(inst: &ThetaInstance) -> Result<Option<DenseVector>> {
    let basis = &inst.basis;
    let mut rows = Vec::with_capacity(inst.half_spaces.len());
    for hs in &inst.half_spaces {
        let n = basis.project_down(hs.normal.as_slice())?;
        let nn = norm(&n);
        let b = hs.rhs();
        if nn == 0.0 {
            if b < 0.0 {
                return Ok(None);
            }
            continue;
        }
        let margin = tolerances::ALT_PROJ * (1.0 + b.abs());
        rows.push((n, b - margin * nn, nn * nn));
    }
    let mut z = basis.project_down(inst.anchor.as_slice())?;
    for _ in 0..tolerances::ALT_PROJ_MAX_ITERS {
        let mut worst: f64 = 0.0;
        for (n, b, n2) in &rows {
            let v = dot(&z, n) - b;
            if v > 0.0 {
                axpy(-v / n2, n, &mut z);
                worst = worst.max(v);
            }
        }
        if worst == 0.0 {
            break;
        }
    }
    let x = basis.lift(&z)?;
    if inst.half_spaces.iter().all(|hs| hs.violation(&x) <= 0.0) {
        Ok(Some(DenseVector::new(x)?))
    } else {
        Ok(None)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeStep {
    /// Certified member of `Ω_k`; `None` marks the step unchecked.
    pub feasible: Option<DenseVector>,
    /// `‖h_k − f‖` and `‖h_{k+1} − f‖` for the certified point `f`.
    pub before: f64,
    pub after: f64,
    /// `Θ_k(h_k)`.
    pub theta: f64,
}

/// Monotone approximation evidence along a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoremProbe {
    /// `(ε₁, ε₂)` with `λ ∈ [ε₁, 2 − ε₂]`.
    pub lambda_bounds: (f64, f64),
    pub steps: Vec<ProbeStep>,
}

impl TheoremProbe {
    pub fn certified(&self) -> usize {
        self.steps.iter().filter(|s| s.feasible.is_some()).count()
    }

    pub fn certified_fraction(&self) -> f64 {
        if self.steps.is_empty() {
            return 0.0;
        }
        self.certified() as f64 / self.steps.len() as f64
    }

    /// Largest `‖h_{k+1} − f‖ − ‖h_k − f‖` over certified steps.
    pub fn max_increase(&self) -> f64 {
        self.steps
            .iter()
            .filter(|s| s.feasible.is_some())
            .map(|s| s.after - s.before)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Certified steps whose distance grew by more than `slack`.
    pub fn violations(&self, slack: f64) -> usize {
        self.steps
            .iter()
            .filter(|s| s.feasible.is_some() && s.after > s.before + slack)
            .count()
    }

    /// Certified steps with `Θ_k(h_k) > 0` whose distance did not shrink.
    pub fn non_strict(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| s.feasible.is_some() && s.theta > 0.0 && s.after >= s.before)
            .count()
    }
}

/// Distances of `trajectory[k]` and `trajectory[k+1]` to a certified point
/// of `∩ H⁻ ∩ R(S_k)` for every instance. The bases must not change along
/// the trajectory, so that `Fix(Φ_k) = R(S_k)`.
pub fn monotone_probe(trajectory: &[DenseVector], instances: &[ThetaInstance], lambda: f64) -> Result<TheoremProbe> {
    check_dim(instances.len() + 1, trajectory.len())?;
    let mut steps = Vec::with_capacity(instances.len());
    for (k, inst) in instances.iter().enumerate() {
        let (h, h_next) = (trajectory[k].as_slice(), trajectory[k + 1].as_slice());
        let theta = inst.theta_value(h)?;
        let feasible = feasible_point(inst)?;
        let (before, after) = match &feasible {
            Some(f) => (norm(&sub(h, f.as_slice())), norm(&sub(h_next, f.as_slice()))),
            None => (f64::NAN, f64::NAN),
        };
        steps.push(ProbeStep {
            feasible,
            before,
            after,
            theta,
        });
    }
    Ok(TheoremProbe {
        lambda_bounds: (lambda, 2.0 - lambda),
        steps,
    })
}

/// A KRR-APSP run on a static system-identification stream whose basis is
/// built once after warm-up and then frozen.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenRun {
    pub n: usize,
    pub d: usize,
    pub q: usize,
    pub rho: f64,
    pub lambda: f64,
    /// Adaptive steps recorded after the basis is built.
    pub steps: usize,
    pub snr_db: Option<f64>,
    pub seed: u64,
}

impl Default for FrozenRun {
    fn default() -> Self {
        Self {
            n: 20,
            d: 4,
            q: 3,
            rho: 0.1,
            lambda: 0.5,
            steps: 500,
            snr_db: Some(20.0),
            seed: 1,
        }
    }
}

/// Trajectory `h_k` (one longer than the instances) and the instance of
/// every adaptive step.
pub struct RecordedRun {
    pub trajectory: Vec<DenseVector>,
    pub instances: Vec<ThetaInstance>,
}

impl FrozenRun {
    pub fn record(&self) -> Result<RecordedRun> {
        let scenario = SysIdScenario::new(SysIdConfig {
            n: self.n,
            snr_db: self.snr_db,
            change_at: None,
            seed: self.seed,
            trial: 0,
        })?;
        let params = KrrParams {
            d: self.d,
            q: self.q,
            r: 1,
            rho: self.rho,
            m: u64::MAX,
            lambda: self.lambda,
            weights: None,
            gamma: 0.999,
            mode: EstimatorMode::Toeplitz,
            warmup: 1,
        };
        let mut filter = KrrFilter::new(self.n, params, H0Mode::Zero)?;
        filter.set_recording(true);
        let mut trajectory = Vec::with_capacity(self.steps + 1);
        let mut instances = Vec::with_capacity(self.steps);
        for sample in scenario.stream() {
            if instances.len() == self.steps {
                break;
            }
            let had_basis = filter.basis().is_some();
            let out = filter.step(&sample.u, sample.d)?;
            if !had_basis {
                continue;
            }
            let info = filter.last_step();
            if trajectory.is_empty() {
                let basis = info.basis_before.as_ref().expect("recorded");
                trajectory.push(DenseVector::new(basis.lift(&info.h_tilde_before)?)?);
            }
            instances.push(ThetaInstance::from_krr_step(info, self.rho)?);
            trajectory.push(out.h_full);
        }
        if instances.len() < self.steps {
            return Err(Error::Inconsistent("stream ended before the requested steps".into()));
        }
        Ok(RecordedRun { trajectory, instances })
    }
}

/// Finite-horizon view of `Θ_k(h_k) → 0` on a consistent static run.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticReport {
    pub lambda_bounds: (f64, f64),
    /// First nonzero `Θ_k(h_k)`.
    pub initial_theta: f64,
    /// Smallest `Θ_k(h_k)` over the last 10% of steps.
    pub tail_min: f64,
    /// Boundedness diagnostics, not asserted.
    pub max_norm: f64,
    pub max_subgradient_norm: f64,
}

impl AsymptoticReport {
    pub fn ratio(&self) -> f64 {
        if self.initial_theta == 0.0 {
            0.0
        } else {
            self.tail_min / self.initial_theta
        }
    }
}

/// Runs a noiseless full-rank identification, where every property set
/// contains `h*`, and tracks `Θ_k(h_k)` and `‖Θ'_k(h_k)‖`.
pub fn asymptotic_diagnostic(run: &FrozenRun) -> Result<AsymptoticReport> {
    let rec = run.record()?;
    let mut thetas = Vec::with_capacity(rec.instances.len());
    let mut max_sub: f64 = 0.0;
    for (inst, h) in rec.instances.iter().zip(&rec.trajectory) {
        let theta = inst.theta_value(h.as_slice())?;
        thetas.push(theta);
        let l = inst.normalizer()?;
        if l > 0.0 {
            let mut g = vec![0.0; h.len()];
            for (i, w) in inst.weights.iter().enumerate() {
                if let Some(p) = inst.project_in_range(i, h.as_slice())? {
                    axpy(w / l, &sub(h.as_slice(), &p), &mut g);
                }
            }
            max_sub = max_sub.max(norm(&g));
        }
    }
    let initial_theta = thetas.iter().copied().find(|&t| t > 0.0).unwrap_or(0.0);
    let tail = (thetas.len() / 10).max(1);
    let tail_min = thetas[thetas.len() - tail..].iter().copied().fold(f64::INFINITY, f64::min);
    Ok(AsymptoticReport {
        lambda_bounds: (run.lambda, 2.0 - run.lambda),
        initial_theta,
        tail_min,
        max_norm: rec.trajectory.iter().map(|h| h.norm()).fold(0.0, f64::max),
        max_subgradient_norm: max_sub,
    })
}
