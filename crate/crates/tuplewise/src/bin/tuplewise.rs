//! Experiment front end: `variance-curves`, `estimate`, `learn` and
//! `check-theory`, each reading one JSON config document (or built-in
//! defaults) and writing CSV. `--threads` changes speed, never results.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tuplewise::checks;
use tuplewise::config::{
    CheckTheoryConfig, EstimateConfig, ExperimentConfig, LearnConfig, VarianceCurvesConfig,
};
use tuplewise::experiments;

#[derive(Parser)]
#[command(
    name = "tuplewise",
    about = "Distributed two-sample U-statistic estimation and pairwise SGD, simulated",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON experiment document; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the document's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path; stdout when neither this nor the document gives one.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker thread count (speed only; results are bit-identical).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form variance as a function of the pair budget.
    VarianceCurves(CommonArgs),
    /// Monte Carlo relative-variance study against theory.
    Estimate(CommonArgs),
    /// Repartitioned pairwise SGD study; also writes a -summary CSV.
    Learn(CommonArgs),
    /// Run every theory check; nonzero exit if any fails.
    CheckTheory(CommonArgs),
}

fn load_config(args: &CommonArgs, kind: &str) -> tuplewise::Result<ExperimentConfig> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let parsed = ExperimentConfig::from_json(&text)?;
            let matches = matches!(
                (&parsed, kind),
                (ExperimentConfig::VarianceCurves(_), "variance-curves")
                    | (ExperimentConfig::Estimate(_), "estimate")
                    | (ExperimentConfig::Learn(_), "learn")
                    | (ExperimentConfig::CheckTheory(_), "check-theory")
            );
            if !matches {
                return Err(tuplewise::Error::Config(format!(
                    "config file describes a different experiment than the {kind} subcommand"
                )));
            }
            parsed
        }
        None => match kind {
            "variance-curves" => ExperimentConfig::VarianceCurves(VarianceCurvesConfig::default()),
            "estimate" => ExperimentConfig::Estimate(EstimateConfig::default()),
            "learn" => ExperimentConfig::Learn(LearnConfig::default()),
            _ => ExperimentConfig::CheckTheory(CheckTheoryConfig::default()),
        },
    };
    if let Some(seed) = args.seed {
        config.set_seed(seed);
    }
    if let Some(out) = &args.out {
        config.set_out(out.to_string_lossy().into_owned());
    }
    Ok(config)
}

fn emit(out: Option<&str>, csv: &str) -> tuplewise::Result<()> {
    match out {
        Some(path) => std::fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

/// Sibling path for the learn summary: `results.csv` -> `results-summary.csv`.
fn summary_path(main: &str) -> String {
    match main.rsplit_once('.') {
        Some((stem, ext)) => format!("{stem}-summary.{ext}"),
        None => format!("{main}-summary"),
    }
}

fn run(cli: Cli) -> tuplewise::Result<bool> {
    let (args, kind) = match &cli.command {
        Command::VarianceCurves(a) => (a, "variance-curves"),
        Command::Estimate(a) => (a, "estimate"),
        Command::Learn(a) => (a, "learn"),
        Command::CheckTheory(a) => (a, "check-theory"),
    };
    if let Some(threads) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| tuplewise::Error::Config(format!("thread pool: {e}")))?;
    }
    let config = load_config(args, kind)?;

    match config {
        ExperimentConfig::VarianceCurves(c) => {
            let csv = experiments::cmd_variance_curves(&c)?;
            emit(c.out.as_deref(), &csv)?;
            Ok(true)
        }
        ExperimentConfig::Estimate(c) => {
            let csv = experiments::cmd_estimate(&c)?;
            emit(c.out.as_deref(), &csv)?;
            Ok(true)
        }
        ExperimentConfig::Learn(c) => {
            let (rows, summary) = experiments::cmd_learn(&c)?;
            match c.out.as_deref() {
                Some(path) => {
                    std::fs::write(path, rows)?;
                    std::fs::write(summary_path(path), summary)?;
                }
                None => {
                    print!("{rows}");
                    eprintln!("(learn summary omitted on stdout; pass --out to write both files)");
                }
            }
            Ok(true)
        }
        ExperimentConfig::CheckTheory(c) => {
            let report = checks::run_all(&c)?;
            emit(c.out.as_deref(), &report.to_csv())?;
            for row in &report.rows {
                eprintln!(
                    "check {:<44} {}",
                    row.name,
                    if row.pass { "pass" } else { "FAIL" }
                );
            }
            Ok(report.all_pass())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
