use std::path::PathBuf;
use std::process::ExitCode;

use asymdir::{report_failure, Command, Invocation, RunConfig};
use clap::{Parser, ValueEnum};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Sub {
    Classify,
    VerifyBarrier,
    Solve,
    Experiment,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Classify => Command::Classify,
            Sub::VerifyBarrier => Command::VerifyBarrier,
            Sub::Solve => Command::Solve,
            Sub::Experiment => Command::Experiment,
        }
    }
}

/// Solvability criteria, barriers and zonal Dirichlet solves on rotationally
/// symmetric Cartan-Hadamard models.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    /// Workflow to run; must agree with `command` in the config if both are set.
    #[arg(value_enum)]
    command: Sub,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Artifact directory (default: `output.dir` from the config, else `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for radius sweeps; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long, short)]
    verbose: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let command = Command::from(cli.command);
    let fallback = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let config = match RunConfig::load(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            report_failure(&fallback, Some(command), None, &e);
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let out = cli
        .out
        .or_else(|| config.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or(fallback);
    if let Some(c) = config.command {
        if c != command {
            let e = asymdir::RunError::Config(format!(
                "config is for `{}` but `{}` was requested",
                c.as_str(),
                command.as_str()
            ));
            report_failure(&out, Some(command), Some(&config), &e);
            return ExitCode::from(e.exit_code() as u8);
        }
    }
    let inv = Invocation {
        command,
        config,
        out,
        threads: cli.threads,
    };
    ExitCode::from(inv.execute() as u8)
}
