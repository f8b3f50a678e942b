//! Numerical checks of the convergence analysis behind KRR-APSP.

mod bounds;
mod phi;
mod probe;
mod report;
mod theta;

pub use bounds::{cg_bound_check, subgradient_projection_check, CgBoundReport, SubgradientReport};
pub use phi::{random_basis, AttractingReport, PhiMap};
pub use probe::{
    asymptotic_diagnostic, feasible_point, monotone_probe, AsymptoticReport, FrozenRun, ProbeStep, RecordedRun,
    TheoremProbe,
};
pub use report::{CheckLine, Report, Status};
pub use theta::{out_of_range, property_sets_of, PropertySet, RestrictedProjection, ThetaInstance};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::filters::{apsp_update, ApspOutcome, ProjectionSet};
use crate::linalg::{max_abs_diff, norm, BasisMatrix, DenseVector, SymMatrix};
use crate::tolerances;

/// A random reduced-rank projection instance: basis, coefficients and data,
/// in both the full and the reduced coordinates.
#[derive(Debug, Clone)]
pub struct RandomInstance {
    pub basis: BasisMatrix,
    pub h_tilde: Vec<f64>,
    pub full: Vec<PropertySet>,
    pub reduced: Vec<ProjectionSet>,
    pub rho: f64,
    pub lambda: f64,
}

impl RandomInstance {
    /// Draws `N ≤ max_n`, `D ≤ min(max_d, N)`, `q ≤ max_q`, `r ≤ max_r`.
    pub fn draw<R: Rng>(rng: &mut R, max_n: usize, max_d: usize, max_q: usize, max_r: usize) -> Result<Self> {
        let n = rng.random_range(2..=max_n);
        let d = rng.random_range(1..=max_d.min(n));
        let q = rng.random_range(1..=max_q);
        let r = rng.random_range(1..=max_r);
        let gauss = |rng: &mut R, len: usize| -> Vec<f64> { (0..len).map(|_| rng.sample(StandardNormal)).collect() };
        let basis = random_basis(n, d, rng)?;
        let h_tilde = gauss(rng, d);
        let target = gauss(rng, n);
        let raw: Vec<f64> = (0..q).map(|_| rng.random_range(0.2..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let full: Vec<PropertySet> = raw
            .iter()
            .map(|w| {
                let columns: Vec<Vec<f64>> = (0..r).map(|_| gauss(rng, n)).collect();
                let targets = columns
                    .iter()
                    .map(|u| crate::linalg::dot(u, &target) + 0.1 * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                PropertySet {
                    columns,
                    targets,
                    weight: w / total,
                }
            })
            .collect();
        let anchor = basis.lift(&h_tilde)?;
        let mean_err = full.iter().map(|s| s.value(&anchor, 0.0)).sum::<f64>() / q as f64;
        let rho = rng.random_range(0.0..1.0) * mean_err;
        let reduced = full
            .iter()
            .map(|s| {
                Ok(ProjectionSet {
                    columns: s.columns.iter().map(|u| basis.project_down(u)).collect::<Result<_>>()?,
                    targets: s.targets.clone(),
                    weight: s.weight,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            basis,
            h_tilde,
            full,
            reduced,
            rho,
            lambda: rng.random_range(0.0..=2.0),
        })
    }

    pub fn anchor(&self) -> DenseVector {
        DenseVector::new(self.basis.lift(&self.h_tilde).expect("rank matches")).expect("finite")
    }

    pub fn theta(&self) -> Result<ThetaInstance> {
        ThetaInstance::from_sets(self.basis.clone(), self.anchor(), &self.full, self.rho)
    }

    /// The reduced update of the filter on this instance.
    pub fn reduced_step(&self) -> Result<ApspOutcome> {
        apsp_update(&self.h_tilde, &self.reduced, self.rho, self.lambda)
    }

    /// `S_kᵀ` applied to the full-space update with an unchanged basis.
    pub fn full_step_reduced(&self) -> Result<Vec<f64>> {
        let phi = PhiMap::identity_refresh(self.basis.clone());
        let next = self.theta()?.rapsm_step(self.anchor().as_slice(), &phi, self.lambda)?;
        self.basis.project_down(&next)
    }
}

/// Sizes of the verification suite.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub seed: u64,
    pub basis_pairs: usize,
    pub instances: usize,
    pub cg_instances: usize,
    pub probe: FrozenRun,
    pub asymptotic: FrozenRun,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            basis_pairs: 100,
            instances: 200,
            cg_instances: 50,
            probe: FrozenRun::default(),
            asymptotic: FrozenRun {
                n: 8,
                d: 8,
                q: 3,
                rho: 1e-4,
                lambda: 1.0,
                steps: 3000,
                snr_db: None,
                seed: 1,
            },
        }
    }
}

fn relative_growth(x: &[f64], y: &[f64]) -> f64 {
    (norm(y) - norm(x)) / (1.0 + norm(x))
}

/// `Φ0 = 0`, nonexpansiveness, the location of `Fix(Φ)`, and both branches
/// of the attracting check on random basis pairs.
fn phi_checks(cfg: &VerifyConfig, rng: &mut ChaCha8Rng, report: &mut Report) -> Result<()> {
    let mut growth = f64::NEG_INFINITY;
    let mut zero: f64 = 0.0;
    let mut fix_off: f64 = 0.0;
    let mut same_dim_gap: f64 = 0.0;
    let mut attract: f64 = 0.0;
    let mut witness_norm_gap: f64 = 0.0;
    let mut witness_missing = 0usize;
    for _ in 0..cfg.basis_pairs {
        let n = rng.random_range(2..=12);
        let d = rng.random_range(1..=n.min(5));
        let a = random_basis(n, d, rng)?;
        let b = random_basis(n, d, rng)?;
        let phi = PhiMap::new(a.clone(), b.clone())?;
        zero = zero.max(norm(&phi.apply(&vec![0.0; n])?));
        for _ in 0..5 {
            let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            growth = growth.max(relative_growth(&x, &phi.apply(&x)?));
        }
        for v in phi.fixed_point_set(tolerances::FIXED_POINT_EIG)? {
            let off = out_of_range(&a, v.as_slice())?.max(out_of_range(&b, v.as_slice())?);
            fix_off = fix_off.max(off / v.norm());
        }
        match phi.attracting_check(0, rng)? {
            AttractingReport::NotAttracting {
                norm_gap,
                fixed_point_gap,
                ..
            } => {
                witness_norm_gap = witness_norm_gap.max(norm_gap);
                if fixed_point_gap <= tolerances::FIXED_POINT_EIG {
                    witness_missing += 1;
                }
            }
            AttractingReport::Attracting { .. } => witness_missing += 1,
        }

        let same = PhiMap::identity_refresh(a.clone());
        let fix = same.fixed_point_set(tolerances::FIXED_POINT_EIG)?;
        let fix_cols: Vec<Vec<f64>> = fix.iter().map(|v| v.as_slice().to_vec()).collect();
        let spans = fix.len() == d && {
            let fix_basis = BasisMatrix::from_columns(n, &fix_cols, 0)?;
            a.columns().all(|c| out_of_range(&fix_basis, c).is_ok_and(|off| off <= 1e-9))
        };
        if !spans {
            same_dim_gap = f64::INFINITY;
        }
        let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        same_dim_gap = same_dim_gap.max(max_abs_diff(&same.apply(&x)?, &a.project(&x)?));
        if let AttractingReport::Attracting { max_identity_error, .. } = same.attracting_check(10, rng)? {
            attract = attract.max(max_identity_error);
        } else {
            attract = f64::INFINITY;
        }
    }
    report.push(CheckLine::bounded("phi_zero_fixed", zero, 0.0, ""));
    report.push(CheckLine::bounded("phi_nonexpansive", growth, tolerances::EXACT, ""));
    report.push(CheckLine::bounded(
        "phi_fix_in_both_ranges",
        fix_off,
        tolerances::FIXED_POINT_EIG,
        "",
    ));
    report.push(CheckLine::bounded("phi_same_basis_projector", same_dim_gap, tolerances::EXACT, ""));
    report.push(CheckLine::bounded(
        "phi_attracting_identity",
        attract,
        tolerances::ATTRACTING_IDENTITY,
        "",
    ));
    let detail = format!("missing_witnesses={witness_missing}");
    let mut line = CheckLine::bounded("phi_not_attracting_witness", witness_norm_gap, tolerances::EXACT, detail);
    if witness_missing > 0 {
        line.status = Status::Fail;
    }
    report.push(line);
    Ok(())
}

/// The reduced update against the full-space update, `M_k ≥ 1`,
/// orthonormality of the bases, and convexity of `Θ`.
fn update_checks(cfg: &VerifyConfig, rng: &mut ChaCha8Rng, report: &mut Report) -> Result<()> {
    let mut equiv: f64 = 0.0;
    let mut m_short: f64 = 0.0;
    let mut ortho: f64 = 0.0;
    let mut jensen = f64::NEG_INFINITY;
    let mut subgrad = f64::NEG_INFINITY;
    let mut oracle_gap: f64 = 0.0;
    let mut oracle_runs = 0usize;
    let mut oracle_uncertified = 0usize;
    for i in 0..cfg.instances {
        let inst = RandomInstance::draw(rng, 12, 4, 3, 2)?;
        ortho = ortho.max(inst.basis.orthonormality_error());
        let reduced = inst.reduced_step()?;
        let full = inst.full_step_reduced()?;
        let scale = 1.0 + norm(&inst.h_tilde);
        equiv = equiv.max(max_abs_diff(&reduced.h_next, &full) / scale);
        if let Some(m) = reduced.relaxation {
            m_short = m_short.max(1.0 - m);
        }
        let y = inst.h_tilde.as_slice();
        let sr = subgradient_projection_check(&inst.full[0], inst.rho, &inst.basis, y, 10, rng)?;
        subgrad = subgrad
            .max(sr.max_inequality_violation)
            .max(sr.projection_violation)
            .max(if sr.noop_when_feasible { f64::NEG_INFINITY } else { f64::INFINITY });

        if i < 20 {
            let theta = inst.theta()?;
            let n = inst.basis.dim();
            let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let (tx, ty) = (theta.theta_value(&x)?, theta.theta_value(&y)?);
            for k in 0..theta.half_spaces.len() {
                let Some(exact) = theta.distance(k, &x)? else { continue };
                oracle_runs += 1;
                match theta.project_restricted(k, &x) {
                    Ok(Some(p)) => oracle_gap = oracle_gap.max((p.distance - exact).abs() / (1.0 + exact)),
                    _ => oracle_uncertified += 1,
                }
            }
            for j in 1..10 {
                let nu = j as f64 / 10.0;
                let z: Vec<f64> = x.iter().zip(&y).map(|(a, b)| nu * a + (1.0 - nu) * b).collect();
                let tz = theta.theta_value(&z)?;
                jensen = jensen.max(tz - (nu * tx + (1.0 - nu) * ty));
            }
        }
    }
    report.push(CheckLine::bounded("orthonormality", ortho, tolerances::ORTHONORMALITY, ""));
    report.push(CheckLine::bounded("reduced_full_equivalence", equiv, 1e-11, ""));
    report.push(CheckLine::bounded("relaxation_at_least_one", m_short, tolerances::EXACT, ""));
    report.push(CheckLine::bounded("subgradient_projection", subgrad, 1e-10, ""));
    report.push(CheckLine::bounded("theta_convexity", jensen, 1e-10, ""));
    report.push(CheckLine::bounded(
        "restricted_distance_oracle",
        oracle_gap,
        1e-8,
        format!("runs={oracle_runs} uncertified={oracle_uncertified}"),
    ));
    Ok(())
}

fn random_spd<R: Rng>(rng: &mut R, n: usize) -> Result<SymMatrix> {
    let a: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect()).collect();
    let shift = rng.random_range(0.01..1.0);
    SymMatrix::from_rows(
        &(0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let s: f64 = (0..n).map(|k| a[k][i] * a[k][j]).sum();
                        s + if i == j { shift } else { 0.0 }
                    })
                    .collect()
            })
            .collect::<Vec<_>>(),
    )
}

fn cg_checks(cfg: &VerifyConfig, rng: &mut ChaCha8Rng, report: &mut Report) -> Result<()> {
    let mut worst = f64::INFINITY;
    let mut cases = 0;
    for _ in 0..cfg.cg_instances {
        let n = rng.random_range(1..=10);
        let r = random_spd(rng, n)?;
        let h: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let p = r.matvec(&h)?;
        let sigma_n2 = rng.random_range(0.0..0.5);
        let sd2 = r.quad_form(&h)? + sigma_n2;
        for d in 1..=n {
            let rep = cg_bound_check(&r, &p, &h, d, sd2)?;
            worst = worst.min(rep.min_slack());
            cases += 1;
        }
    }
    report.push(CheckLine::bounded(
        "cg_bound_and_chain",
        -worst,
        tolerances::EXACT,
        format!("cases={cases}"),
    ));
    Ok(())
}

fn probe_checks(cfg: &VerifyConfig, report: &mut Report) -> Result<()> {
    let rec = cfg.probe.record()?;
    let probe = monotone_probe(&rec.trajectory, &rec.instances, cfg.probe.lambda)?;
    let frac = probe.certified_fraction();
    let mut line = CheckLine::bounded(
        "monotone_approximation",
        probe.max_increase(),
        tolerances::MONOTONE_SLACK,
        format!(
            "certified={}/{} non_strict={}",
            probe.certified(),
            probe.steps.len(),
            probe.non_strict()
        ),
    );
    if frac < 0.9 {
        line.status = Status::Fail;
    }
    report.push(line);

    let asym = asymptotic_diagnostic(&cfg.asymptotic)?;
    report.push(CheckLine::bounded(
        "asymptotic_theta",
        asym.ratio(),
        1e-6,
        format!("initial={:.3e} tail_min={:.3e}", asym.initial_theta, asym.tail_min),
    ));
    report.push(CheckLine::info(
        "boundedness",
        format!(
            "max_norm={:.3e} max_subgradient_norm={:.3e}",
            asym.max_norm, asym.max_subgradient_norm
        ),
    ));
    Ok(())
}

/// Runs the whole suite. Each group draws from its own random stream.
pub fn verify_command(cfg: &VerifyConfig) -> Report {
    let mut report = Report::default();
    let rng = |stream: u64| {
        let mut r = ChaCha8Rng::seed_from_u64(cfg.seed);
        r.set_stream(stream);
        r
    };
    let results = [
        ("phi", phi_checks(cfg, &mut rng(1), &mut report)),
        ("update", update_checks(cfg, &mut rng(2), &mut report)),
        ("cg", cg_checks(cfg, &mut rng(3), &mut report)),
        ("probe", probe_checks(cfg, &mut report)),
    ];
    for (name, res) in results {
        if let Err(e) = res {
            report.push(CheckLine::failed(name, format!("error: {e}")));
        }
    }
    report
}
