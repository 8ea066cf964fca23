use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use piezowave_core::decay;
use piezowave_harness::output::{read_energy_series, to_json};
use piezowave_harness::{run, sweep, HarnessError, Result, RunConfig, SweepConfig};

#[derive(Parser)]
#[command(
    name = "piezowave",
    version,
    about = "Simulate and analyse coupled piezoelectric beams with nonlinear damping and sources"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Exp,
    Poly,
    Log,
}

#[derive(Subcommand)]
enum Command {
    /// Time-step a run and write energy.csv, well.json, blowup.json and summary.json.
    Simulate { config: PathBuf },
    /// Potential-well analysis and prediction without time stepping; writes well.json.
    Classify { config: PathBuf },
    /// Run the cross product of overrides and write sweep.csv.
    Sweep { config: PathBuf },
    /// Fit a decay envelope to the Etot column of an energy CSV.
    Fit {
        csv: PathBuf,
        #[arg(long, value_enum)]
        model: Model,
        /// Offset of the logarithmic clock.
        #[arg(long = "C", default_value_t = 1.0)]
        c: f64,
        /// Exponent of the rational envelopes, (m − 1)/2 for damping exponent m.
        #[arg(long)]
        eta: Option<f64>,
        /// First record of the fitted tail (default: second half).
        #[arg(long)]
        tail_start: Option<usize>,
    },
    /// Print κ, τ and the blow-up time bound under both conventions.
    Bounds { config: PathBuf },
}

fn fit(
    csv: &Path,
    model: Model,
    c: f64,
    eta: Option<f64>,
    tail: Option<usize>,
) -> Result<String> {
    let (t, e) = read_energy_series(csv)?;
    let need_eta =
        || eta.ok_or_else(|| HarnessError::Invalid("--eta is required for this model".into()));
    let fit = match model {
        Model::Exp => decay::fit_exponential(&t, &e, tail)?,
        Model::Poly => decay::fit_polynomial(&t, &e, need_eta()?, tail)?,
        Model::Log => decay::fit_logarithmic(&t, &e, need_eta()?, c, tail)?,
    };
    Ok(to_json(&fit))
}

fn dispatch(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::Simulate { config } => {
            let out = run::simulate(&RunConfig::load(&config)?)?;
            let s = &out.summary;
            match s.t_detect {
                Some(t) => println!("{} {} t_detect={t}", s.classification, s.outcome),
                None => println!("{} {} t_final={}", s.classification, s.outcome, s.t_final),
            }
        }
        Command::Classify { config } => {
            let well = run::classify(&RunConfig::load(&config)?)?;
            print!("{}", to_json(&well));
        }
        Command::Sweep { config } => {
            let result = sweep::sweep(&SweepConfig::load(&config)?)?;
            let failed = result.rows.iter().filter(|r| r.failed()).count();
            println!("{} runs, {failed} failed", result.rows.len());
            if result.all_failed() {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Fit {
            csv,
            model,
            c,
            eta,
            tail_start,
        } => print!("{}", fit(&csv, model, c, eta, tail_start)?),
        Command::Bounds { config } => {
            print!("{}", to_json(&run::bounds(&RunConfig::load(&config)?)?))
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
