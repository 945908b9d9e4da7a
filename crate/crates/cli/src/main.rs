mod error;
mod ingest;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ivbma_core::simulate::{generate_seeded, SimSpec};
use ivbma_core::study::{run_study, StudyConfig};
use ivbma_core::{run_chain, summarize, Mode, SamplerConfig};

use crate::error::{CliError, Result};
use crate::ingest::{build_dataset, read_table, Preprocess, Roles};

#[derive(Debug, Parser)]
#[command(
    name = "ivbma",
    version,
    about = "Instrumental-variable Bayesian model averaging"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one chain on a CSV dataset.
    Run(RunArgs),
    /// Write a synthetic dataset and its generating values.
    Simulate(SimulateArgs),
    /// Run the replicated simulation study.
    Replicate(ReplicateArgs),
}

/// Chain-length presets as (iterations, burn-in).
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Preset {
    /// 50,000 / 10,000
    Standard,
    /// 200,000 / 20,000
    #[value(name = "200k")]
    #[serde(rename = "200k")]
    Long,
    /// 250,000 / 50,000
    #[value(name = "250k")]
    #[serde(rename = "250k")]
    Longer,
}

impl Preset {
    fn lengths(self) -> (usize, usize) {
        match self {
            Preset::Standard => (50_000, 10_000),
            Preset::Long => (200_000, 20_000),
            Preset::Longer => (250_000, 50_000),
        }
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    /// CSV file with a header row.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    response: String,
    #[arg(long)]
    endogenous: String,
    /// Comma-separated instrument columns.
    #[arg(long, value_delimiter = ',', required = true)]
    instruments: Vec<String>,
    /// Comma-separated covariate columns.
    #[arg(long, value_delimiter = ',')]
    covariates: Vec<String>,
    #[arg(long)]
    add_intercept: bool,
    /// Center covariates and instruments.
    #[arg(long)]
    center: bool,
    /// Scale covariates and instruments to unit standard deviation.
    #[arg(long)]
    scale: bool,
    #[arg(long, default_value = "ivbma")]
    mode: Mode,
    #[arg(long, value_enum, default_value_t = Preset::Standard)]
    preset: Preset,
    /// Total sweeps, overriding the preset.
    #[arg(long)]
    iters: Option<usize>,
    /// Discarded sweeps, overriding the preset.
    #[arg(long)]
    burn: Option<usize>,
    #[arg(long, default_value_t = 1)]
    thin: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Also write every kept draw to trace.csv.
    #[arg(long)]
    trace: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = ivbma_core::simulate::DEFAULT_N)]
    n: usize,
    #[arg(long, default_value_t = ivbma_core::simulate::DEFAULT_P)]
    p: usize,
    #[arg(long, default_value_t = ivbma_core::simulate::DEFAULT_Q)]
    q: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ReplicateArgs {
    #[arg(long)]
    reps: usize,
    /// 10,000 sweeps with 2,000 burn-in instead of 50,000 / 10,000.
    #[arg(long)]
    desk_scale: bool,
    /// Comma-separated sampler modes to compare.
    #[arg(long, value_delimiter = ',', default_value = "ivbma,iv")]
    modes: Vec<Mode>,
    /// Total sweeps per chain, overriding the scale.
    #[arg(long)]
    iters: Option<usize>,
    /// Discarded sweeps per chain, overriding the scale.
    #[arg(long)]
    burn: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Worker threads (defaults to one per core).
    #[arg(long, env = "IVBMA_THREADS")]
    threads: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Serialize)]
struct RunManifest<'a> {
    data: &'a PathBuf,
    roles: Roles,
    preprocess: Preprocess,
    preset: Preset,
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let table = read_table(&args.data)?;
    let roles = Roles {
        response: args.response.clone(),
        endogenous: args.endogenous.clone(),
        instruments: args.instruments.clone(),
        covariates: args.covariates.clone(),
    };
    let pre = Preprocess {
        add_intercept: args.add_intercept,
        center: args.center,
        scale: args.scale,
    };
    let data = build_dataset(&table, &roles, pre)?;
    let (iters, burn) = args.preset.lengths();
    let config = SamplerConfig {
        iterations: args.iters.unwrap_or(iters),
        burn_in: args.burn.unwrap_or(burn),
        thin: args.thin,
        seed: args.seed,
        stream: 0,
        mode: args.mode,
    };
    config.validate()?;

    let trace = run_chain(&data, &config)?;
    let names = data.names();
    let (second, first) = (names.second_stage(), names.first_stage());
    let summary = summarize(&trace, &second, &first)?;

    output::create_dir(&args.out)?;
    output::write_file(&args.out, "summary.csv", &summary.to_csv())?;
    let manifest = RunManifest {
        data: &args.data,
        roles,
        preprocess: pre,
        preset: args.preset,
    };
    output::write_json(
        &args.out,
        "diagnostics.json",
        &output::Diagnostics::new(&manifest, &trace, &summary),
    )?;
    if args.trace {
        output::write_file(
            &args.out,
            "trace.csv",
            &output::trace_csv(&trace, &second, &first),
        )?;
    }
    println!(
        "{} draws; acceptance {:.3} (outcome) / {:.3} (instrument); wrote {}",
        summary.draws,
        summary.acceptance_second,
        summary.acceptance_first,
        args.out.display()
    );
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let spec = SimSpec::with_dims(args.n, args.p, args.q, args.seed);
    let (data, truth) = generate_seeded::<f64>(&spec)?;
    output::create_dir(&args.out)?;
    output::write_file(&args.out, "dataset.csv", &output::dataset_csv(&data))?;
    output::write_json(&args.out, "truth.json", &truth)?;
    println!("{} rows written to {}", data.n(), args.out.display());
    Ok(())
}

fn cmd_replicate(args: &ReplicateArgs) -> Result<()> {
    let mut config = if args.desk_scale {
        StudyConfig::desk_scale(args.reps, args.seed)
    } else {
        StudyConfig::full_scale(args.reps, args.seed)
    };
    config.modes = args.modes.clone();
    if let Some(it) = args.iters {
        config.iterations = it;
    }
    if let Some(b) = args.burn {
        config.burn_in = b;
    }
    if args.threads == Some(0) {
        return Err(CliError::Input("--threads must be at least 1".into()));
    }
    let report = run_study(&config, args.threads)?;
    output::create_dir(&args.out)?;
    output::write_json(&args.out, "study_report.json", &report)?;
    for agg in &report.aggregates {
        println!(
            "{}: MSE outcome {:.4}, instrument {:.4}, total {:.4}; median beta {:.4}",
            agg.mode.as_str(),
            agg.mse.second,
            agg.mse.first,
            agg.mse.total,
            agg.second[0].median_estimate
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Replicate(a) => cmd_replicate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
