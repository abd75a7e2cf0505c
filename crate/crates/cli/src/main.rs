//! Command-line entry point for the experiment harness.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gradgraph::harness::{run, ExperimentConfig};

#[derive(Parser, Debug)]
#[command(name = "gradgraph", version, about = "Gradient-graph geometry experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment configuration (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for report.txt, CSV tables and field dumps.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    verbose: bool,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Phase and induced metric of the configured potential.
    Phase,
    /// Rotation parameters and certificate.
    RotateCheck,
    /// Volume minimization with quadratic boundary data.
    Minimize,
    /// Growing-ball sweep of volume minimizers.
    Bernstein,
    /// Rotated-metric oscillation decay and Harnack ratios.
    Liouville,
    /// Seeded Harnack suite with rescaling checks.
    Harnack,
    /// Graph Laplacian of Hessian functionals.
    Theorem4,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Phase => "phase",
            Command::RotateCheck => "rotate-check",
            Command::Minimize => "minimize",
            Command::Bernstein => "bernstein",
            Command::Liouville => "liouville",
            Command::Harnack => "harnack",
            Command::Theorem4 => "theorem4",
        }
    }
}

fn execute(cli: &Cli) -> gradgraph::Result<bool> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = Some(s);
    }
    if let Some(o) = &cli.out {
        cfg.out = Some(o.clone());
    }
    cfg.verbose |= cli.verbose;
    cfg.validate()?;
    let report = run(cli.command.name(), &cfg)?;
    print!("{}", report.render());
    if let Some(dir) = &cfg.out {
        report.write(dir)?;
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
