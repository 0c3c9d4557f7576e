//! `infreg`: scenario-driven checks for metric regularity at infinity.
//!
//! Exit codes: 0 all checks pass, 1 computation error, 2 some check FAILs,
//! 3 scenario parse error.

mod commands;
mod report;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use infreg::regmod::SamplerConfig;

use commands::{Context, Failure};
use report::{Output, Status};

#[derive(Parser)]
#[command(name = "infreg", version, about = "Metric regularity at infinity for polyhedral set-valued maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario file (TOML).
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Directory for report.jsonl and side files.
    #[arg(long, global = true, default_value = "infreg-out")]
    out: PathBuf,
    #[arg(long, global = true, default_value_t = 0x5eed)]
    seed: u64,
    /// Ratio samples per estimate.
    #[arg(long, global = true, default_value_t = 10_000)]
    budget: usize,
    /// Overrides the tolerance of tolerance-gated checks.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    Slice,
    Jelonek,
    NormalCone,
    CoderivativeInf,
    RegEstimate,
    RgPlus,
    CriterionCheck,
    StrongCheck,
    Perturb,
    RadiusReport,
    SolveLg,
    All,
}

fn run(cli: &Cli) -> Result<Vec<report::Record>, Failure> {
    let path = cli.scenario.as_ref().ok_or_else(|| Failure::Parse("--scenario is required".into()))?;
    let scenario = scenario::load(path).map_err(|e| Failure::Parse(e.0))?;
    let map = scenario.build_map().map_err(|e| Failure::Parse(e.0))?;
    let window = scenario.infinity_window().map_err(|e| Failure::Parse(format!("field `window`: {e}")))?;
    if let Some(t) = cli.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Failure::Parse(format!("--tol must be positive, got {t}")));
        }
    }
    let ctx = Context {
        scenario,
        map,
        window,
        cfg: SamplerConfig { samples: cli.budget.max(1), seed: cli.seed, ..SamplerConfig::default() },
        tol: cli.tol,
    };
    let mut out = Output::create(&cli.out)?;
    let records = match cli.command {
        Command::Slice => commands::slice(&ctx),
        Command::Jelonek => commands::jelonek(&ctx),
        Command::NormalCone => commands::normal_cone(&ctx),
        Command::CoderivativeInf => commands::coderivative_inf(&ctx),
        Command::RegEstimate => commands::reg_estimate(&ctx, &out),
        Command::RgPlus => commands::rg_plus_cmd(&ctx),
        Command::CriterionCheck => commands::criterion(&ctx),
        Command::StrongCheck => commands::strong(&ctx),
        Command::Perturb => commands::perturb(&ctx, &out),
        Command::RadiusReport => commands::radius(&ctx),
        Command::SolveLg => commands::solve(&ctx, &out),
        Command::All => commands::all(&ctx, &out),
    }?;
    for r in &records {
        out.record(r)?;
    }
    out.flush()?;
    Ok(records)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("INFREG_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // Only fails if a pool already exists, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(&cli) {
        Ok(records) => {
            for r in &records {
                let tag = if r.status == Status::Pass { "PASS" } else { "FAIL" };
                println!("{tag} {}", r.check);
            }
            if records.iter().all(|r| r.status == Status::Pass) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(Failure::Compute(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Parse(e)) => {
            eprintln!("parse error: {e}");
            ExitCode::from(3)
        }
    }
}
