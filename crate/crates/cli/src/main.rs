use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use svi_cli::{build_workspace, emit_csv, execute, load_spec, RunFilter, RunOptions, RunReport};

#[derive(Parser)]
#[command(name = "svi", version, about = "Stability analysis for set-valued inclusions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Problem spec (JSON).
    #[arg(long)]
    spec: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the seed recorded in the spec.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Run a single analysis by id.
    #[arg(long)]
    only: Option<String>,
    /// Emit one analysis as CSV instead of the JSON report.
    #[arg(long, value_name = "ANALYSIS_ID")]
    csv: Option<String>,
    /// Include wall-clock timings (makes output machine-dependent).
    #[arg(long)]
    timings: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run every analysis in the spec.
    Run(CommonArgs),
    /// Run only the non-certification analyses.
    Analyze(CommonArgs),
    /// Run only the certification analyses.
    Certify(CommonArgs),
    /// Run only value sweeps (CSV-friendly).
    Sweep(CommonArgs),
    /// Parse and build the spec without running anything.
    Validate {
        #[arg(long)]
        spec: PathBuf,
    },
}

fn write_output(args: &CommonArgs, report: &RunReport) -> anyhow::Result<()> {
    let text = match &args.csv {
        Some(id) => emit_csv(report, id)?,
        None => report.to_json(),
    };
    match &args.out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("writing report to {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(args: &CommonArgs, filter: RunFilter, sweeps_only: bool) -> anyhow::Result<RunReport> {
    let (spec, hash) = load_spec(&args.spec)?;
    let mut spec = spec;
    if sweeps_only {
        spec.analyses
            .retain(|a| matches!(a, svi_cli::AnalysisSpec::ValueSweep { .. }));
    }
    let opts = RunOptions {
        seed_override: args.seed,
        jobs: args.jobs,
        only: args.only.clone(),
        timings: args.timings,
    };
    let report = execute(&spec, filter, &opts, hash)?;
    write_output(args, &report)?;
    Ok(report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(args) => run(args, RunFilter::All, false),
        Command::Analyze(args) => run(args, RunFilter::AnalysesOnly, false),
        Command::Certify(args) => run(args, RunFilter::CertificationsOnly, false),
        Command::Sweep(args) => run(args, RunFilter::AnalysesOnly, true),
        Command::Validate { spec } => {
            let loaded = load_spec(spec).and_then(|(spec, _)| {
                build_workspace(&spec, spec.seed)?;
                println!(
                    "ok: {} instance(s), {} objective(s), {} analysis(es)",
                    spec.instances.len(),
                    spec.objectives.len(),
                    spec.analyses.len()
                );
                Ok(())
            });
            return match loaded {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e:#}");
                    ExitCode::FAILURE
                }
            };
        }
    };
    match outcome {
        Ok(report) if report.any_violated() => ExitCode::from(2),
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
