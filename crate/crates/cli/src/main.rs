use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use surprise_cli::{
    exit, run_eval, run_simulate, run_solve, run_table, run_verify, CliError, DayRange,
    DistributionFile, OutputFormat, VERIFY_GRID_DEFAULT,
};
use surprise_core::AscentConfig;

#[derive(Parser)]
#[command(
    name = "surprise",
    version,
    about = "Surprise-maximizing exam schedules"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form optimal distribution and policy table for m days
    Solve {
        #[arg(long)]
        days: DayRange,
        #[arg(long, value_enum, default_value_t)]
        format: OutputFormat,
    },
    /// Policy tables for every m in a range
    Table {
        #[arg(long)]
        days: DayRange,
        #[arg(long, value_enum, default_value_t)]
        format: OutputFormat,
    },
    /// Objectives and tail masses of a distribution file
    Eval {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        format: OutputFormat,
    },
    /// Check the closed form against the numerical oracles
    Verify {
        #[arg(long)]
        days: DayRange,
        /// Lattice resolution for the grid oracle (used for m <= 3)
        #[arg(long, default_value_t = VERIFY_GRID_DEFAULT)]
        grid: u32,
        /// L-infinity agreement tolerance for the ascent oracle
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t)]
        format: OutputFormat,
    },
    /// Monte Carlo estimate of expected surprise at the optimum
    Simulate {
        #[arg(long)]
        days: DayRange,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, value_enum, default_value_t)]
        format: OutputFormat,
    },
}

fn run(command: Command) -> Result<String, CliError> {
    match command {
        Command::Solve { days, format } => Ok(run_solve(days.single()?, format)),
        Command::Table { days, format } => run_table(&days, format),
        Command::Eval { input, format } => {
            let file = DistributionFile::load(&input)?;
            Ok(run_eval(&file, format))
        }
        Command::Verify {
            days,
            grid,
            tol,
            seed,
            format,
        } => {
            let config = AscentConfig {
                agreement_tol: tol,
                seed,
                ..AscentConfig::default()
            };
            let report = run_verify(&days, grid, &config)?;
            let text = report.render(format);
            match report.first_failure() {
                None => Ok(text),
                Some(row) => {
                    print!("{text}");
                    Err(CliError::Mismatch(format!(
                        "m={} {} = {} exceeds {}",
                        row.m, row.check, row.value, row.tolerance
                    )))
                }
            }
        }
        Command::Simulate {
            days,
            samples,
            seed,
            format,
        } => run_simulate(days.single()?, samples, seed, format),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(exit::USAGE as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(text) => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(text.as_bytes());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
