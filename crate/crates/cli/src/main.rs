use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vertexlab_cli::config::Task;
use vertexlab_cli::repro::emit_reproduction_suite;
use vertexlab_cli::{run_scenarios, summary_line, RunOptions};

#[derive(Parser)]
#[command(name = "vertexlab", version, about = "Regularity experiments for characteristic vertices of backward parabolas")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (TOML, schema_version = 1).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for report.json and per-scenario CSV files.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads for independent scenarios.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Reserved; all computations are deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Run every scenario in the config.
    Run(RunArgs),
    /// Slow-growth and nonlinearity validity checks.
    Validate(RunArgs),
    /// Rescaled kernels, asymptotics and Hermite spectra.
    Kernel(RunArgs),
    /// Boundary-layer profiles and the limit equation.
    Blayer(RunArgs),
    /// Projected ODE criterion and verdicts.
    Criterion(RunArgs),
    /// Classical integral tests.
    Petrovskii(RunArgs),
    /// Direct simulation of the rescaled PDE.
    Simulate(RunArgs),
    /// Simulation against the ODE criterion.
    Compare(RunArgs),
    /// Parameter sweeps.
    Sweep(RunArgs),
    /// Write the reproduction configs for the acceptance criteria.
    Repro {
        #[arg(long, default_value = "repro")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, task) = match cli.command {
        Command::Repro { out } => {
            return match emit_reproduction_suite(&out) {
                Ok(paths) => {
                    for p in paths {
                        println!("{}", p.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            };
        }
        Command::Run(a) => (a, None),
        Command::Validate(a) => (a, Some(Task::Validate)),
        Command::Kernel(a) => (a, Some(Task::Kernel)),
        Command::Blayer(a) => (a, Some(Task::Blayer)),
        Command::Criterion(a) => (a, Some(Task::Criterion)),
        Command::Petrovskii(a) => (a, Some(Task::Petrovskii)),
        Command::Simulate(a) => (a, Some(Task::Simulate)),
        Command::Compare(a) => (a, Some(Task::Compare)),
        Command::Sweep(a) => (a, Some(Task::Sweep)),
    };
    let opts = RunOptions { workers: args.workers, seed: args.seed, task };
    match run_scenarios(&args.config, &args.out, &opts) {
        Ok(report) => {
            for r in &report.reports {
                println!("{}", summary_line(r));
            }
            for c in &report.consistency {
                println!("consistency {} ({} vs {}): {}", c.phi, c.petrovskii, c.criterion, c.consistent);
            }
            println!("report: {}", args.out.join("report.json").display());
            if report.failed() {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
