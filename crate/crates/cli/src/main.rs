use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use selab_cli::{cmd_manufactured, cmd_report, cmd_solve, cmd_sweep, ManufacturedArgs};

/// Radial finite-volume laboratory for singular elliptic problems with
/// degenerate coercivity.
#[derive(Parser)]
#[command(name = "selab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment; writes trace.csv and report.json.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides `out_dir` in the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a parameter sweep; writes one directory per case plus summary.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Worker threads (0 = one per core).
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Manufactured-solution convergence study against u = 1 - r^2.
    Manufactured {
        #[arg(long)]
        dim: u32,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        gamma: f64,
        /// Comma-separated cell counts, coarse to fine.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        cells: Vec<usize>,
        /// Truncation level n.
        #[arg(long, default_value_t = 1000)]
        n: u32,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Pretty-print a stored report.json.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Solve { config, out } => cmd_solve(&config, out.as_deref()),
        Command::Sweep { config, jobs, out } => cmd_sweep(&config, jobs, out.as_deref()),
        Command::Manufactured { dim, p, gamma, cells, n, out } => cmd_manufactured(&ManufacturedArgs {
            dimension: dim,
            p,
            gamma,
            cells,
            level: n,
            out,
        }),
        Command::Report { input } => cmd_report(&input),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
