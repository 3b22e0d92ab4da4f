use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use irs_robust::harness::{
    load_config, render_results, run_experiment, write_results, ExperimentSpec, OutputFormat,
    Scheme, Sweep,
};
use irs_robust::Result;

/// Sweeps a robust IRS-assisted cell-free beamforming design over one
/// parameter and reports average sum rates per scheme.
#[derive(Debug, Parser)]
#[command(name = "irs-robust", version)]
struct Cli {
    /// TOML config; unset keys take the default scenario values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Sweep variable and grid, e.g. `kappa2=0.001,0.01,0.05`.
    #[arg(long)]
    sweep: Option<Sweep>,
    /// Comma-separated schemes: continuous, 2bit, 1bit, conventional, upper_bound, rjd.
    #[arg(long, value_delimiter = ',')]
    schemes: Option<Vec<Scheme>>,
    #[arg(long)]
    realizations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Error draws per realization when scoring a design.
    #[arg(long)]
    mc_samples: Option<usize>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    format: Option<OutputFormat>,
    #[arg(long)]
    threads: Option<usize>,
}

fn build_spec(cli: Cli) -> Result<ExperimentSpec> {
    let mut spec = match &cli.config {
        Some(path) => load_config(path)?,
        None => ExperimentSpec::default(),
    };
    if let Some(s) = cli.sweep {
        spec.sweep = Some(s);
    }
    if let Some(s) = cli.schemes {
        spec.schemes = s;
    }
    if let Some(r) = cli.realizations {
        spec.realizations = r;
    }
    if let Some(s) = cli.seed {
        spec.seed = s;
    }
    if let Some(m) = cli.mc_samples {
        spec.base.mc_samples = m;
    }
    if let Some(o) = cli.output {
        spec.output = Some(o);
    }
    if let Some(f) = cli.format {
        spec.format = f;
    }
    if let Some(t) = cli.threads {
        spec.threads = Some(t);
    }
    spec.validate()?;
    Ok(spec)
}

fn run(cli: Cli) -> Result<()> {
    let spec = build_spec(cli)?;
    let rows = run_experiment(&spec)?;
    match &spec.output {
        Some(path) => write_results(&rows, path, spec.format),
        None => {
            let text = render_results(&rows, spec.format)?;
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::FAILURE
        }
    }
}
