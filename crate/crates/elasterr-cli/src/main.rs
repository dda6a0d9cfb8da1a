//! Command-line front end: every flag mirrors one run-configuration field,
//! and the defaults reproduce the baseline effectivity sweep.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use elasterr::{ElementPair, EstimatorKind, ProblemId};
use elasterr_cli::{run_experiment, CliError, RunConfig, SummaryRow};

/// Benchmark sweeps for the mixed elasticity solver and its error
/// estimators.
#[derive(Parser)]
#[command(name = "elasterr", version)]
struct Cli {
    /// Benchmark problem: p1 (smooth, known solution), p2 (boundary-driven),
    /// p3 (mixed boundary with a corner singularity).
    #[arg(long, default_value = "p1")]
    problem: String,
    /// Element pair: q2q1 (continuous pressure) or q2p1 (discontinuous
    /// linear pressure).
    #[arg(long, default_value = "q2q1")]
    pair: String,
    /// Shear modulus.
    #[arg(long, default_value_t = 100.0)]
    mu: f64,
    /// Poisson ratio in (0, 0.5].
    #[arg(long, default_value_t = 0.4)]
    nu: f64,
    /// Mesh levels l with element size h = 2^-l, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "2,3,4,5,6")]
    levels: Vec<u32>,
    /// Estimators to evaluate, comma separated: residual, elasticity,
    /// modified, stokes, poisson.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "residual,elasticity,modified,stokes,poisson"
    )]
    estimators: Vec<String>,
    /// Output directory for summary.csv, summary.json, and element maps.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Also write one per-element indicator table per level and estimator.
    #[arg(long)]
    element_map: bool,
}

fn parse_config(cli: Cli) -> Result<RunConfig, CliError> {
    let problem = ProblemId::parse(&cli.problem).map_err(|e| CliError::Config(e.to_string()))?;
    let pair = ElementPair::parse(&cli.pair)
        .ok_or_else(|| CliError::Config(format!("unknown element pair {:?}, expected q2q1 or q2p1", cli.pair)))?;
    let estimators = cli
        .estimators
        .iter()
        .map(|s| {
            EstimatorKind::parse(s).ok_or_else(|| {
                CliError::Config(format!(
                    "unknown estimator {s:?}, expected residual, elasticity, modified, stokes, or poisson"
                ))
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RunConfig {
        problem,
        pair,
        mu: cli.mu,
        nu: cli.nu,
        levels: cli.levels,
        estimators,
        out: cli.out,
        element_map: cli.element_map,
    })
}

fn print_table(config: &RunConfig, rows: &[SummaryRow]) {
    println!(
        "problem={} pair={} mu={} nu={}",
        config.problem.name(),
        config.pair.name(),
        config.mu,
        config.nu
    );
    println!(
        "{:>10} {:>8} {:>11} {:>13} {:>13} {:>13} {:>12} {:>7}",
        "h", "ndof", "estimator", "eta", "theta", "err", "effectivity", "rate"
    );
    for row in rows {
        let err = row.err.map(|e| format!("{e:.6e}")).unwrap_or_default();
        let eff = row.effectivity.map(|e| format!("{e:.4}")).unwrap_or_default();
        let rate = row.rate.map(|r| format!("{r:.3}")).unwrap_or_default();
        println!(
            "{:>10.6} {:>8} {:>11} {:>13.6e} {:>13.6e} {:>13} {:>12} {:>7}",
            row.h,
            row.ndof,
            row.estimator.name(),
            row.eta,
            row.theta,
            err,
            eff,
            rate
        );
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let config = match parse_config(cli) {
        Ok(config) => config,
        Err(err) => {
            eprintln!("{err}");
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match run_experiment(config.clone()) {
        Ok(output) => {
            print_table(&config, &output.rows);
            println!("wrote {}", output.summary_csv.display());
            println!("wrote {}", output.summary_json.display());
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
