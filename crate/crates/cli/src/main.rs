use std::path::PathBuf;
use std::process::ExitCode;

use caputo_cli::{cmd_check, cmd_ml, cmd_omega, cmd_solve, load_config, Failure, Identity, Outcome, RunOptions};
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Caputo fractional differential equations as singular Volterra integral
/// equations: solves, identity checks and special functions.
#[derive(Debug, Parser)]
#[command(name = "caputo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Directory for trajectory.csv and report.json.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Grid step, overriding grid.h.
    #[arg(long)]
    h: Option<f64>,
    /// Repeat on h, h/2, ..., h/2^(K-1) and report defect rates (check only).
    #[arg(long, default_value_t = 1)]
    refine: u32,
}

impl RunArgs {
    fn options(&self) -> RunOptions {
        RunOptions {
            h: self.h,
            refine: self.refine,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum IdentityArg {
    Semigroup,
    Shift,
    Cocycle,
    Continuity,
    Steady,
}

impl From<IdentityArg> for Identity {
    fn from(a: IdentityArg) -> Self {
        match a {
            IdentityArg::Semigroup => Identity::Semigroup,
            IdentityArg::Shift => Identity::Shift,
            IdentityArg::Cocycle => Identity::Cocycle,
            IdentityArg::Continuity => Identity::Continuity,
            IdentityArg::Steady => Identity::Steady,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the equation and write the trajectory.
    Solve(RunArgs),
    /// Measure the defect of an identity; exit 4 if it exceeds the tolerance.
    Check {
        identity: IdentityArg,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Print the Mittag-Leffler function E_alpha(t).
    #[command(allow_negative_numbers = true)]
    Ml { alpha: f64, t: f64 },
    /// Long-time statistics of the solve from a constant history.
    Omega(RunArgs),
}

fn report(result: Result<Outcome, Failure>) -> ExitCode {
    match result {
        Ok(o) => {
            for line in &o.summary {
                println!("{line}");
            }
            ExitCode::from(o.exit_code() as u8)
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code() as u8)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Ml { alpha, t } => match cmd_ml(alpha, t) {
            Ok(s) => {
                println!("{s}");
                ExitCode::SUCCESS
            }
            Err(f) => {
                eprintln!("error: {}", f.message());
                ExitCode::from(f.exit_code() as u8)
            }
        },
        Command::Solve(a) => report(load_config(&a.config).and_then(|c| cmd_solve(&c, &a.options(), &a.out))),
        Command::Omega(a) => report(load_config(&a.config).and_then(|c| cmd_omega(&c, &a.options(), &a.out))),
        Command::Check { identity, run } => {
            report(load_config(&run.config).and_then(|c| cmd_check(&c, identity.into(), &run.options(), &run.out)))
        }
    }
}
