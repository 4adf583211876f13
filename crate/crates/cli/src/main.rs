use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use critnls::io::read_to_string;
use critnls_cli::commands::{self, CliError};
use critnls_cli::{RunConfig, CHECK_FAILED};

#[derive(Parser)]
#[command(name = "critnls", version, about = "Ground states of the critical combined-powers NLS")]
struct Cli {
    /// key=value configuration file; flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the ground state at one lambda
    Solve(Flags),
    /// Solve the lambda -> infinity limit equation
    Soliton(Flags),
    /// Solve along a geometric lambda grid and write a CSV table
    Sweep(Flags),
    /// Verify a sweep CSV against the predicted scaling laws
    Check(CheckFlags),
    /// Norms and constants of the Talenti bubble
    Talenti(Flags),
    /// Exact rho(lambda) map of the mass-constrained problem
    Mass(Flags),
}

#[derive(Args, Default)]
struct Flags {
    #[arg(long)]
    dim: Option<u32>,
    /// exponent, e.g. 3 or 7/2
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    /// a:b
    #[arg(long)]
    lambda_window: Option<String>,
    #[arg(long)]
    points_per_decade: Option<usize>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// worker threads, 0 for all cores
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    report: Option<PathBuf>,
    /// model prefactor for `mass` (calibrated on the first point otherwise)
    #[arg(long)]
    prefactor: Option<String>,
}

#[derive(Args)]
struct CheckFlags {
    /// sweep CSV to verify
    input: Option<PathBuf>,
    /// comma-separated subset of theorem1,theorem3,envelope,mass
    #[arg(long)]
    checks: Option<String>,
    #[command(flatten)]
    flags: Flags,
}

impl Flags {
    fn into_config(self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::default();
        let text = |v: Option<PathBuf>| v.map(|p| p.display().to_string());
        let pairs = [
            ("dim", self.dim.map(|d| d.to_string())),
            ("q", self.q),
            ("lambda", self.lambda),
            ("lambda_window", self.lambda_window),
            ("points_per_decade", self.points_per_decade.map(|n| n.to_string())),
            ("tol", self.tol),
            ("out", text(self.out)),
            ("jobs", self.jobs.map(|n| n.to_string())),
            ("report", text(self.report)),
            ("prefactor", self.prefactor),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                cfg.set(k, &v).map_err(CliError::Usage)?;
            }
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let file = match &cli.config {
        Some(path) => RunConfig::parse(&read_to_string(path)?)?,
        None => RunConfig::default(),
    };
    let mut extra = RunConfig::default();
    let (cmd, flags) = match cli.command {
        Command::Solve(f) => ("solve", f),
        Command::Soliton(f) => ("soliton", f),
        Command::Sweep(f) => ("sweep", f),
        Command::Talenti(f) => ("talenti", f),
        Command::Mass(f) => ("mass", f),
        Command::Check(c) => {
            if let Some(p) = &c.input {
                extra.set("input", &p.display().to_string()).map_err(CliError::Usage)?;
            }
            if let Some(list) = &c.checks {
                extra.set("checks", list).map_err(CliError::Usage)?;
            }
            ("check", c.flags)
        }
    };
    let cfg = file.merged(flags.into_config()?).merged(extra);
    match cmd {
        "solve" => commands::solve(&cfg)?,
        "soliton" => commands::soliton(&cfg)?,
        "sweep" => commands::sweep(&cfg)?,
        "talenti" => commands::talenti(&cfg)?,
        "mass" => commands::mass(&cfg)?,
        _ => {
            return Ok(if commands::check(&cfg)? { 0 } else { CHECK_FAILED });
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("critnls: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
