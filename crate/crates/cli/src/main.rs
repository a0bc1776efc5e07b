//! `qfreq`: runs one experiment and writes its CSVs and `manifest.json`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qfreq::config::{ConfigFile, Experiment, Overrides, RunConfig};
use qfreq::runner::{run, MANIFEST};
use qfreq::Error;

#[derive(Parser)]
#[command(name = "qfreq", version, about = "Frequency-domain experiments on data-reuploading circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the curve layout on a low/mid/high-frequency target.
    FitCurve(Flags),
    /// Fourier coefficients of the ansatz at seeded parameters.
    Spectrum(Flags),
    /// Actual against frozen-kernel residual dynamics on a curve.
    QntkCompare(Flags),
    /// Train on two Iris classes and track projected frequencies.
    Iris(Flags),
    /// Alignment-trained fidelity kernel and SVM on discrete-log labels.
    Dlp(Flags),
}

/// Flags override values from `--config`.
#[derive(Args)]
struct Flags {
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
    #[arg(long, value_name = "N")]
    iterations: Option<usize>,
    #[arg(long, value_name = "F", allow_negative_numbers = true)]
    eta: Option<f64>,
}

fn resolve(experiment: Experiment, flags: Flags) -> Result<RunConfig, Error> {
    let file = match &flags.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            ConfigFile::parse(&text)?
        }
        None => ConfigFile::default(),
    };
    let overrides = Overrides {
        experiment: Some(experiment),
        seed: flags.seed,
        out: flags.out,
        threads: flags.threads,
        iterations: flags.iterations,
        eta: flags.eta,
    };
    RunConfig::resolve(file, &overrides)
}

fn execute(cli: Cli) -> Result<bool, Error> {
    let (experiment, flags) = match cli.command {
        Command::FitCurve(f) => (Experiment::FitCurve, f),
        Command::Spectrum(f) => (Experiment::Spectrum, f),
        Command::QntkCompare(f) => (Experiment::QntkCompare, f),
        Command::Iris(f) => (Experiment::Iris, f),
        Command::Dlp(f) => (Experiment::Dlp, f),
    };
    let config = resolve(experiment, flags)?;
    if let Some(n) = config.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let manifest = run(&config)?;
    println!("{}", config.out.join(MANIFEST).display());
    println!(
        "{}",
        serde_json::to_string_pretty(&manifest.metrics).expect("metrics serialize")
    );
    if let Some(f) = &manifest.failure {
        eprintln!("run incomplete: {f}");
    }
    Ok(manifest.complete)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
