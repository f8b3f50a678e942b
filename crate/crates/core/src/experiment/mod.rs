//! Monte-Carlo experiment runner, metrics, complexity accounting and CSV
//! output.

mod complexity;
mod csv_io;

pub use complexity::{
    alpha, beta, complexity_count, estimator_count, krr_filter_update, Algorithm, ComplexityParams,
    Count, LinearCount,
};
pub use csv_io::{emit_csv, parse_csv, CSV_COLUMNS};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::filters::{
    AdaptiveFilter, CgrrfFilter, CgrrfParams, H0Mode, KrrFilter, KrrParams, NlmsFilter, RlsFilter,
};
use crate::linalg::{dot, DenseVector};
use crate::scenarios::{
    CdmaConfig, CdmaScenario, KeyValues, StreamSample, SysIdConfig, SysIdScenario, Truth,
};
use crate::stats::EstimatorMode;

/// RLS starts from `P = δ⁻¹I` with `δ` this multiple of the input power.
pub const RLS_DELTA_FACTOR: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq)]
pub enum FilterSpec {
    Krr(KrrParams),
    Cgrrf { d: usize, m: u64, gamma: f64 },
    Nlms { mu: f64 },
    Rls { forgetting: f64 },
}

impl FilterSpec {
    pub fn label(&self) -> String {
        match self {
            FilterSpec::Krr(p) => format!("krr_D{}_q{}", p.d, p.q),
            FilterSpec::Cgrrf { d, .. } => format!("cgrrf_D{d}"),
            FilterSpec::Nlms { .. } => "nlms".to_string(),
            FilterSpec::Rls { .. } => "rls".to_string(),
        }
    }

    fn key_values(&self) -> Vec<(String, String)> {
        let l = self.label();
        let kv = |k: &str, v: String| (format!("{l}.{k}"), v);
        match self {
            FilterSpec::Krr(p) => vec![
                kv("D", p.d.to_string()),
                kv("q", p.q.to_string()),
                kv("r", p.r.to_string()),
                kv("rho", p.rho.to_string()),
                kv("m", p.m.to_string()),
                kv("lambda", p.lambda.to_string()),
                kv("gamma", p.gamma.to_string()),
                kv("weights", match &p.weights {
                    None => "uniform".into(),
                    Some(w) => w.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";"),
                }),
                kv("warmup", p.warmup.to_string()),
            ],
            FilterSpec::Cgrrf { d, m, gamma } => vec![
                kv("D", d.to_string()),
                kv("m", m.to_string()),
                kv("gamma", gamma.to_string()),
            ],
            FilterSpec::Nlms { mu } => vec![kv("lambda", mu.to_string())],
            FilterSpec::Rls { forgetting } => vec![
                kv("forgetting", forgetting.to_string()),
                kv("delta", format!("{RLS_DELTA_FACTOR}*input_power")),
            ],
        }
    }

    /// Closed-form count for this filter, where one applies.
    pub fn closed_form(&self, n: usize) -> Count {
        let n = n as u64;
        match self {
            FilterSpec::Krr(p) => complexity_count(
                Algorithm::KrrSingle,
                ComplexityParams { n, d: p.d as u64, q: p.q as u64, r: p.r as u64, m: p.m },
            ),
            FilterSpec::Cgrrf { d, m, .. } => complexity_count(
                Algorithm::Cgrrf,
                ComplexityParams { n, d: *d as u64, q: 1, r: 1, m: *m },
            ),
            FilterSpec::Nlms { .. } => complexity_count(Algorithm::Nlms, ComplexityParams { n, d: 1, q: 1, r: 1, m: 1 }),
            FilterSpec::Rls { .. } => complexity_count(Algorithm::Rls, ComplexityParams { n, d: 1, q: 1, r: 1, m: 1 }),
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        match self {
            FilterSpec::Krr(p) => p.validate(n),
            FilterSpec::Cgrrf { d, m, gamma } => {
                CgrrfFilter::new(n, CgrrfParams { d: *d, m: *m, gamma: *gamma, ..Default::default() }).map(|_| ())
            }
            FilterSpec::Nlms { mu } => NlmsFilter::new(n, *mu).map(|_| ()),
            FilterSpec::Rls { forgetting } => RlsFilter::new(n, *forgetting, 1.0).map(|_| ()),
        }
    }

    fn build(
        &self,
        n: usize,
        mode: EstimatorMode,
        initial: Option<&DenseVector>,
        input_power: f64,
    ) -> Result<Box<dyn AdaptiveFilter>> {
        Ok(match self {
            FilterSpec::Krr(p) => {
                let params = KrrParams { mode, ..p.clone() };
                let h0 = initial.map_or(H0Mode::Zero, |s| H0Mode::Vector(s.clone()));
                Box::new(KrrFilter::new(n, params, h0)?)
            }
            FilterSpec::Cgrrf { d, m, gamma } => Box::new(CgrrfFilter::new(
                n,
                CgrrfParams {
                    d: *d,
                    m: *m,
                    gamma: *gamma,
                    mode,
                    warmup: 1,
                    initial: initial.cloned(),
                },
            )?),
            FilterSpec::Nlms { mu } => Box::new(NlmsFilter::new(n, *mu)?),
            FilterSpec::Rls { forgetting } => Box::new(RlsFilter::new(
                n,
                *forgetting,
                RLS_DELTA_FACTOR * input_power.max(f64::MIN_POSITIVE),
            )?),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioSpec {
    SysId {
        n: usize,
        snr_db: Option<f64>,
        change_at: Option<usize>,
    },
    Cdma {
        users: usize,
        users_post: Option<usize>,
        change_at: Option<usize>,
        snr_db: Option<f64>,
        interferer_amplitude: f64,
    },
}

impl ScenarioSpec {
    pub fn dim(&self) -> usize {
        match self {
            ScenarioSpec::SysId { n, .. } => *n,
            ScenarioSpec::Cdma { .. } => crate::scenarios::GOLD_LENGTH,
        }
    }

    fn mode(&self) -> EstimatorMode {
        match self {
            ScenarioSpec::SysId { .. } => EstimatorMode::Toeplitz,
            ScenarioSpec::Cdma { .. } => EstimatorMode::FullSym,
        }
    }
}

/// A scenario instance for one trial.
enum Instance {
    SysId(SysIdScenario),
    Cdma(CdmaScenario),
}

impl Instance {
    fn new(spec: &ScenarioSpec, seed: u64, trial: u64) -> Result<Self> {
        Ok(match spec {
            ScenarioSpec::SysId { n, snr_db, change_at } => Instance::SysId(SysIdScenario::new(SysIdConfig {
                n: *n,
                snr_db: *snr_db,
                change_at: *change_at,
                seed,
                trial,
            })?),
            ScenarioSpec::Cdma {
                users,
                users_post,
                change_at,
                snr_db,
                interferer_amplitude,
            } => Instance::Cdma(CdmaScenario::new(CdmaConfig {
                users: *users,
                users_post: *users_post,
                change_at: *change_at,
                snr_db: *snr_db,
                interferer_amplitude: *interferer_amplitude,
                seed,
                trial,
            })?),
        })
    }

    fn samples(&self, iters: usize) -> Vec<StreamSample> {
        match self {
            Instance::SysId(s) => s.stream().take(iters).collect(),
            Instance::Cdma(s) => s.stream().take(iters).collect(),
        }
    }

    /// Starting vector for CG and for `h̃₀`: the desired signature in CDMA.
    fn initial(&self) -> Option<DenseVector> {
        match self {
            Instance::SysId(_) => None,
            Instance::Cdma(s) => Some(s.desired_signature()),
        }
    }

    fn key_values(&self) -> Vec<(String, String)> {
        match self {
            Instance::SysId(s) => s.key_values(),
            Instance::Cdma(s) => s.key_values(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: ScenarioSpec,
    pub filters: Vec<FilterSpec>,
    pub runs: usize,
    pub iters: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    /// Checks every filter against the scenario before any trial runs.
    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::param("runs", "must be at least 1"));
        }
        if self.iters == 0 {
            return Err(Error::param("iters", "must be at least 1"));
        }
        if self.filters.is_empty() {
            return Err(Error::param("filter", "select at least one filter"));
        }
        let n = self.scenario.dim();
        for f in &self.filters {
            f.validate(n)?;
        }
        let mut labels: Vec<String> = self.filters.iter().map(FilterSpec::label).collect();
        labels.sort();
        labels.dedup();
        if labels.len() != self.filters.len() {
            return Err(Error::param("filter", "two filters share a label"));
        }
        Instance::new(&self.scenario, self.seed, 0).map(|_| ())
    }

    pub fn key_values(&self) -> Vec<(String, String)> {
        let mut kv = vec![
            ("library".to_string(), env!("CARGO_PKG_NAME").to_string()),
            ("version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
            ("runs".to_string(), self.runs.to_string()),
            ("iters".to_string(), self.iters.to_string()),
            ("seed".to_string(), self.seed.to_string()),
            ("estimator".to_string(), self.scenario.mode().as_str().to_string()),
            ("mse".to_string(), "a_priori".to_string()),
        ];
        if let Ok(inst) = Instance::new(&self.scenario, self.seed, 0) {
            kv.extend(inst.key_values());
        }
        kv.push((
            "filters".to_string(),
            self.filters.iter().map(FilterSpec::label).collect::<Vec<_>>().join(","),
        ));
        for f in &self.filters {
            kv.extend(f.key_values());
        }
        kv
    }
}

/// Ensemble averages at one iteration for one filter.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub k: usize,
    pub algorithm: String,
    /// Mean of `(d_k − y_k)²`.
    pub mse: f64,
    /// Mean of `‖h*_k − h_k‖²/‖h*_k‖²`; NaN when there is no reference
    /// system.
    pub mismatch: f64,
    /// Fraction of runs whose filter updated at `k`.
    pub update_rate: f64,
    /// Mean multiplications spent at `k`.
    pub mults: f64,
}

pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

impl MetricsRecord {
    pub fn mse_db(&self) -> f64 {
        to_db(self.mse)
    }

    pub fn mismatch_db(&self) -> f64 {
        to_db(self.mismatch)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub header: Vec<(String, String)>,
    /// Grouped by filter in configuration order, then by `k`.
    pub records: Vec<MetricsRecord>,
}

/// Window statistics over `from ≤ k < to` for one filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowSummary {
    /// `10 log₁₀` of the window mean of the ensemble MSE.
    pub mse_db: f64,
    pub mismatch_db: f64,
    pub update_rate: f64,
    pub mults: f64,
}

impl ExperimentResult {
    pub fn series<'a>(&'a self, algorithm: &'a str) -> impl Iterator<Item = &'a MetricsRecord> + 'a {
        self.records.iter().filter(move |r| r.algorithm == algorithm)
    }

    pub fn window(&self, algorithm: &str, from: usize, to: usize) -> Option<WindowSummary> {
        let rows: Vec<&MetricsRecord> = self.series(algorithm).filter(|r| r.k >= from && r.k < to).collect();
        if rows.is_empty() {
            return None;
        }
        let len = rows.len() as f64;
        let mean = |f: fn(&MetricsRecord) -> f64| rows.iter().map(|r| f(r)).sum::<f64>() / len;
        Some(WindowSummary {
            mse_db: to_db(mean(|r| r.mse)),
            mismatch_db: to_db(mean(|r| r.mismatch)),
            update_rate: mean(|r| r.update_rate),
            mults: mean(|r| r.mults),
        })
    }
}

/// Per-step values of one filter in one trial: `(e², mismatch, updated, mults)`.
type Trace = Vec<[f64; 4]>;

fn run_trial(cfg: &ExperimentConfig, trial: u64) -> Result<Vec<Trace>> {
    let inst = Instance::new(&cfg.scenario, cfg.seed, trial)?;
    let samples = inst.samples(cfg.iters);
    let n = cfg.scenario.dim();
    let initial = inst.initial();
    let input_power = samples.first().map_or(1.0, |s| dot(&s.u, &s.u) / n as f64);
    cfg.filters
        .iter()
        .map(|spec| {
            let mut f = spec.build(n, cfg.scenario.mode(), initial.as_ref(), input_power)?;
            samples
                .iter()
                .map(|s| {
                    let out = f.step(&s.u, s.d)?;
                    let e = s.d - out.y;
                    let mismatch = match &s.truth {
                        Truth::System(h) => {
                            let diff: f64 = h.iter().zip(out.h_full.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
                            diff / h.norm_sq()
                        }
                        Truth::Bit(_) => f64::NAN,
                    };
                    Ok([e * e, mismatch, if out.updated { 1.0 } else { 0.0 }, out.mults as f64])
                })
                .collect()
        })
        .collect()
}

/// Runs `runs` independent trials in parallel and averages per iteration.
///
/// Trials are reduced in index order, so the result does not depend on the
/// number of worker threads.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let traces: Vec<Vec<Trace>> = (0..cfg.runs as u64)
        .into_par_iter()
        .map(|t| run_trial(cfg, t))
        .collect::<Result<_>>()?;
    let runs = cfg.runs as f64;
    let mut records = Vec::with_capacity(cfg.filters.len() * cfg.iters);
    for (fi, spec) in cfg.filters.iter().enumerate() {
        let label = spec.label();
        let mut sums = vec![[0.0f64; 4]; cfg.iters];
        for trial in &traces {
            for (acc, v) in sums.iter_mut().zip(&trial[fi]) {
                for j in 0..4 {
                    acc[j] += v[j];
                }
            }
        }
        records.extend(sums.iter().enumerate().map(|(k, s)| MetricsRecord {
            k,
            algorithm: label.clone(),
            mse: s[0] / runs,
            mismatch: s[1] / runs,
            update_rate: s[2] / runs,
            mults: s[3] / runs,
        }));
    }
    Ok(ExperimentResult {
        header: cfg.key_values(),
        records,
    })
}
