use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use psdmf_cli::commands::{cmd_grid, cmd_run, cmd_validate, report_dir};

/// Partially shared deep matrix factorization for multi-view clustering.
#[derive(Parser)]
#[command(name = "psdmf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run repeated seeded trials and report mean ± std of ACC, NMI, Purity.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override a config value, e.g. `--set model.mu=0.5`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Sweep the Cartesian product of the listed config values.
    Grid {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        grid: PathBuf,
    },
    /// Load a dataset manifest and print its shape.
    Validate { manifest: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, overrides } => {
            cmd_run(&config, &overrides, &report_dir()).map(|(summary, files)| {
                print!("{}", summary.dataset.table());
                print!("{}", summary.table());
                println!("report   {}", files.report.display());
                println!("config   {}", files.config.display());
                summary.all_completed()
            })
        }
        Command::Grid { config, grid } => {
            cmd_grid(&config, &grid, &report_dir()).map(|(report, path)| {
                print!("{}", report.long_table());
                println!("report   {}", path.display());
                report.cells.iter().all(|c| c.run.all_completed())
            })
        }
        Command::Validate { manifest } => cmd_validate(&manifest).map(|info| {
            print!("{}", info.table());
            true
        }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
