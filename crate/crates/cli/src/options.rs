use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use krrapsp::experiment::{ExperimentConfig, FilterSpec, ScenarioSpec};
use krrapsp::filters::KrrParams;

#[derive(Parser, Debug)]
#[command(name = "krrapsp", version, about = "Reduced-rank adaptive filtering experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// System identification with a colored input and optional system change.
    Sysid(Flags),
    /// Training-mode DS/CDMA interference suppression with Gold codes.
    Cdma(Flags),
    /// Run the numerical verification suite.
    Verify(Flags),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum FilterKind {
    Krr,
    Cgrrf,
    Nlms,
    Rls,
}

/// One flag set for every subcommand; flags a subcommand does not use are
/// rejected.
#[derive(Args, Debug, Default)]
pub struct Flags {
    /// Filters to run, comma separated or repeated.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub filter: Vec<FilterKind>,
    /// Filter length (sysid only; cdma uses the code length 31).
    #[arg(long = "N")]
    pub n: Option<usize>,
    /// Subspace ranks; one krr and one cgrrf instance per value.
    #[arg(long = "D", value_delimiter = ',')]
    pub d: Vec<usize>,
    /// Parallel projections per step; one krr instance per value.
    #[arg(long, value_delimiter = ',')]
    pub q: Vec<usize>,
    /// Columns per data matrix.
    #[arg(long)]
    pub r: Option<usize>,
    /// Error bound.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Basis refresh period.
    #[arg(long)]
    pub m: Option<u64>,
    /// Relaxation for krr, step size for nlms.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Forgetting factor of the correlation estimates and of rls.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Signal-to-noise ratio in dB; `inf` for noiseless data.
    #[arg(long = "snr-db")]
    pub snr_db: Option<f64>,
    /// Monte-Carlo runs.
    #[arg(long)]
    pub runs: Option<usize>,
    /// Iterations per run.
    #[arg(long)]
    pub iters: Option<usize>,
    /// Iteration at which the system or the interferer set changes.
    #[arg(long = "change-at")]
    pub change_at: Option<usize>,
    /// Active users, the desired user included.
    #[arg(long)]
    pub users: Option<usize>,
    /// Active users after the change; interferers then have twice the
    /// desired user's amplitude.
    #[arg(long = "users-post")]
    pub users_post: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV output path (sysid, cdma) or report path (verify).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print measured and closed-form multiplication counts per filter.
    #[arg(long = "count-mults")]
    pub count_mults: bool,
}

const DEFAULT_N: usize = 50;
const DEFAULT_RUNS: usize = 300;
const DEFAULT_ITERS: usize = 2000;
const DEFAULT_SNR_DB: f64 = 15.0;
const DEFAULT_CHANGE_AT: usize = 1000;
const DYNAMIC_AMPLITUDE: f64 = 2.0;

impl Flags {
    /// Names of the flags given on the command line.
    fn given(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        let mut mark = |set: bool, name| {
            if set {
                out.push(name);
            }
        };
        mark(!self.filter.is_empty(), "--filter");
        mark(self.n.is_some(), "--N");
        mark(!self.d.is_empty(), "--D");
        mark(!self.q.is_empty(), "--q");
        mark(self.r.is_some(), "--r");
        mark(self.rho.is_some(), "--rho");
        mark(self.m.is_some(), "--m");
        mark(self.lambda.is_some(), "--lambda");
        mark(self.gamma.is_some(), "--gamma");
        mark(self.snr_db.is_some(), "--snr-db");
        mark(self.runs.is_some(), "--runs");
        mark(self.iters.is_some(), "--iters");
        mark(self.change_at.is_some(), "--change-at");
        mark(self.users.is_some(), "--users");
        mark(self.users_post.is_some(), "--users-post");
        mark(self.seed.is_some(), "--seed");
        mark(self.out.is_some(), "--out");
        mark(self.count_mults, "--count-mults");
        out
    }

    fn reject(&self, command: &str, not_allowed: &[&str]) -> Result<(), String> {
        match self.given().into_iter().find(|f| not_allowed.contains(f)) {
            Some(flag) => Err(format!("{flag} is not accepted by `{command}`")),
            None => Ok(()),
        }
    }

    pub fn check_verify(&self) -> Result<(), String> {
        let allowed = ["--seed", "--out"];
        match self.given().into_iter().find(|f| !allowed.contains(f)) {
            Some(flag) => Err(format!("{flag} is not accepted by `verify`")),
            None => Ok(()),
        }
    }

    pub fn sysid_config(&self) -> Result<ExperimentConfig, String> {
        self.reject("sysid", &["--users", "--users-post"])?;
        let scenario = ScenarioSpec::SysId {
            n: self.n.unwrap_or(DEFAULT_N),
            snr_db: self.snr(),
            change_at: self.change_at,
        };
        self.config(scenario)
    }

    pub fn cdma_config(&self) -> Result<ExperimentConfig, String> {
        self.reject("cdma", &["--N"])?;
        let dynamic = self.users_post.is_some();
        let scenario = ScenarioSpec::Cdma {
            users: self.users.unwrap_or(8),
            users_post: self.users_post,
            change_at: match (self.change_at, dynamic) {
                (Some(k), _) => Some(k),
                (None, true) => Some(DEFAULT_CHANGE_AT),
                (None, false) => None,
            },
            snr_db: self.snr(),
            interferer_amplitude: if dynamic { DYNAMIC_AMPLITUDE } else { 1.0 },
        };
        self.config(scenario)
    }

    fn snr(&self) -> Option<f64> {
        match self.snr_db {
            Some(s) if s.is_infinite() && s > 0.0 => None,
            Some(s) => Some(s),
            None => Some(DEFAULT_SNR_DB),
        }
    }

    fn config(&self, scenario: ScenarioSpec) -> Result<ExperimentConfig, String> {
        let cfg = ExperimentConfig {
            scenario,
            filters: self.filters()?,
            runs: self.runs.unwrap_or(DEFAULT_RUNS),
            iters: self.iters.unwrap_or(DEFAULT_ITERS),
            seed: self.seed.unwrap_or(1),
        };
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }

    fn filters(&self) -> Result<Vec<FilterSpec>, String> {
        let base = KrrParams::default();
        let ds = if self.d.is_empty() { vec![base.d] } else { self.d.clone() };
        let qs = if self.q.is_empty() { vec![base.q] } else { self.q.clone() };
        let kinds = if self.filter.is_empty() { vec![FilterKind::Krr] } else { self.filter.clone() };
        let gamma = self.gamma.unwrap_or(base.gamma);
        let lambda = self.lambda.unwrap_or(base.lambda);
        let m = self.m.unwrap_or(base.m);
        let no_krr = !kinds.contains(&FilterKind::Krr);
        if no_krr {
            for (set, flag) in [
                (!self.q.is_empty(), "--q"),
                (self.r.is_some(), "--r"),
                (self.rho.is_some(), "--rho"),
            ] {
                if set {
                    return Err(format!("{flag} needs the krr filter"));
                }
            }
        }
        let mut out = Vec::new();
        for kind in kinds {
            match kind {
                FilterKind::Krr => {
                    for &d in &ds {
                        for &q in &qs {
                            out.push(FilterSpec::Krr(KrrParams {
                                d,
                                q,
                                r: self.r.unwrap_or(base.r),
                                rho: self.rho.unwrap_or(base.rho),
                                m,
                                lambda,
                                gamma,
                                ..base.clone()
                            }));
                        }
                    }
                }
                FilterKind::Cgrrf => out.extend(ds.iter().map(|&d| FilterSpec::Cgrrf { d, m, gamma })),
                FilterKind::Nlms => out.push(FilterSpec::Nlms { mu: lambda }),
                FilterKind::Rls => out.push(FilterSpec::Rls { forgetting: gamma }),
            }
        }
        Ok(out)
    }
}
