use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use richards_kit::experiments::{jacobian_at, run_scenario};
use richards_kit::mtx::write_matrix;
use richards_kit::{KitError, Scenario};

#[derive(Parser)]
#[command(name = "richards-kit", version, about = "Run Richards equation solver experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a scenario file.
    Run {
        scenario: PathBuf,
        /// Worker threads for independent runs.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
        threads: u16,
        /// Output directory; overrides the scenario's `output` key.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and range-check a scenario file.
    Validate { scenario: PathBuf },
    /// Write the Jacobian at a given time step and Newton iterate in Matrix
    /// Market format.
    ExportMatrix {
        scenario: PathBuf,
        #[arg(long)]
        step: usize,
        #[arg(long)]
        iter: usize,
        /// Output file; defaults to `jacobian_step{L}_iter{R}.mtx`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<bool, KitError> {
    match cli.command {
        Command::Run { scenario, threads, out } => {
            let s = Scenario::from_path(&scenario)?;
            let out = out
                .or_else(|| s.experiment.output.as_ref().map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("out"));
            let outcome = run_scenario(&s, &out, threads as usize)?;
            print!("{}", outcome.summary);
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            Ok(outcome.converged)
        }
        Command::Validate { scenario } => {
            let s = Scenario::from_path(&scenario)?;
            println!("{}: valid {} scenario (config {})", scenario.display(), s.experiment.kind, s.hash());
            Ok(true)
        }
        Command::ExportMatrix { scenario, step, iter, out } => {
            let s = Scenario::from_path(&scenario)?;
            let a = jacobian_at(&s, step, iter)?;
            let path = out.unwrap_or_else(|| PathBuf::from(format!("jacobian_step{step}_iter{iter}.mtx")));
            let file = File::create(&path).map_err(|e| KitError::Io(format!("{}: {e}", path.display())))?;
            write_matrix(&a, BufWriter::new(file)).map_err(|e| KitError::Io(e.to_string()))?;
            println!("wrote {} ({}x{}, {} nonzeros)", path.display(), a.nrows(), a.ncols(), a.nnz());
            Ok(true)
        }
    }
}
