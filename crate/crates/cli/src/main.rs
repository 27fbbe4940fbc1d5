use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use smnoma::error::Error;
use smnoma::experiment::{run, run_property_suite, ExperimentConfig, Figure};

#[derive(Parser)]
#[command(
    name = "smnoma",
    version,
    about = "SM-NOMA spectral-efficiency experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-user MI, lower bounds and baselines over SNR.
    Fig1(Options),
    /// Sum MI of every scheme over SNR.
    Fig2a(Options),
    /// Per-user MI over the power ratio at fixed SNR.
    Fig2b(Options),
    /// Randomized invariant checks; exits with 2 if any fails.
    Props(Options),
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Quadrature,
    Montecarlo,
}

#[derive(Args)]
struct Options {
    /// TOML file overriding the defaults of the subcommand.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV output path; the JSON sidecar is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    realizations: Option<usize>,
    #[arg(long, value_enum)]
    method: Option<Method>,
    #[arg(long)]
    mc_samples: Option<usize>,
}

impl Options {
    fn resolve(&self, figure: Figure) -> Result<ExperimentConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(figure, path)?,
            None => ExperimentConfig::defaults(figure),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.output_path = out.clone();
        }
        if let Some(n) = self.realizations {
            cfg.realizations = n;
        }
        if let Some(method) = self.method {
            cfg.method = match method {
                Method::Quadrature => "quadrature",
                Method::Montecarlo => "montecarlo",
            }
            .into();
        }
        if let Some(n) = self.mc_samples {
            cfg.mc_samples = n;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn execute(figure: Figure, options: &Options) -> Result<ExitCode, Error> {
    let cfg = options.resolve(figure)?;
    if figure == Figure::Props {
        let report = run_property_suite(&cfg)?;
        println!("{report}");
        return Ok(if report.passed() {
            ExitCode::SUCCESS
        } else {
            ExitCode::from(2)
        });
    }
    let output = run(&cfg)?;
    let sidecar = output.write(&cfg.output_path)?;
    println!(
        "wrote {} curves to {} ({})",
        output.curves.len(),
        cfg.output_path.display(),
        sidecar.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return ExitCode::from(if err.use_stderr() { 1 } else { 0 });
        }
    };
    let (figure, options) = match &cli.command {
        Command::Fig1(o) => (Figure::Fig1, o),
        Command::Fig2a(o) => (Figure::Fig2a, o),
        Command::Fig2b(o) => (Figure::Fig2b, o),
        Command::Props(o) => (Figure::Props, o),
    };
    match execute(figure, options) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(if err.is_config_error() { 1 } else { 3 })
        }
    }
}
