mod options;

use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use krrapsp::experiment::{emit_csv, run_experiment, ExperimentConfig, ExperimentResult};
use krrapsp::verify::{verify_command, VerifyConfig};

use options::{Cli, Command, Flags};

/// Failure classes and their exit codes.
enum Failure {
    Invariant(String),
    Config(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Invariant(_) => 1,
            Failure::Config(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Invariant(m) | Failure::Config(m) => m,
        }
    }
}

impl From<krrapsp::Error> for Failure {
    fn from(e: krrapsp::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Sysid(flags) => {
            let cfg = flags.sysid_config().map_err(Failure::Config)?;
            experiment(&cfg, &flags)
        }
        Command::Cdma(flags) => {
            let cfg = flags.cdma_config().map_err(Failure::Config)?;
            experiment(&cfg, &flags)
        }
        Command::Verify(flags) => verify(&flags),
    }
}

fn experiment(cfg: &ExperimentConfig, flags: &Flags) -> Result<(), Failure> {
    let out = flags
        .out
        .as_deref()
        .ok_or_else(|| Failure::Config("--out is required".into()))?;
    let result = run_experiment(cfg)?;
    emit_csv(&result, out)?;
    summarize(cfg, &result, flags.count_mults);
    println!("wrote {}", out.display());
    Ok(())
}

/// One line per filter over the last 200 iterations.
fn summarize(cfg: &ExperimentConfig, result: &ExperimentResult, count_mults: bool) {
    let from = cfg.iters.saturating_sub(200);
    for spec in &cfg.filters {
        let label = spec.label();
        let Some(w) = result.window(&label, from, cfg.iters) else {
            continue;
        };
        let mut line = format!(
            "{label:<14} k={from}..{} mse_db={:.2} mismatch_db={:.2} update_rate={:.3}",
            cfg.iters, w.mse_db, w.mismatch_db, w.update_rate
        );
        if count_mults {
            let all = result.window(&label, 0, cfg.iters).expect("series present");
            let closed = spec.closed_form(cfg.scenario.dim());
            let closed_f = *closed.numer() as f64 / *closed.denom() as f64;
            line.push_str(&format!(
                " mults_measured={:.1} mults_closed_form={closed_f:.1}",
                all.mults
            ));
        }
        println!("{line}");
    }
}

fn verify(flags: &Flags) -> Result<(), Failure> {
    flags.check_verify().map_err(Failure::Config)?;
    let cfg = VerifyConfig {
        seed: flags.seed.unwrap_or(VerifyConfig::default().seed),
        ..Default::default()
    };
    let report = verify_command(&cfg);
    let text = report.to_string();
    print!("{text}");
    if let Some(path) = &flags.out {
        write_report(path, &text)?;
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Invariant("verification suite reported failures".into()))
    }
}

fn write_report(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::Config(format!("cannot write {}: {e}", path.display())))
}
