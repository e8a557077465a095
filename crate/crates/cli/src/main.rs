use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use delaybound::commands::{load_with_overrides, run_command, Command, CommandError, RunOptions};

/// Norm bounds, stability checks and region estimates for delay systems.
#[derive(Parser, Debug)]
#[command(name = "delaybound", version)]
struct Cli {
    /// simulate, reduce, verify, radius, region, robust, fts,
    /// reproduce-fig1 or reproduce-fig2
    command: String,
    /// Configuration file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's output.dir or ".".
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write SVG plots.
    #[arg(long)]
    svg: bool,
    /// Simulated time after t0.
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    rtol: Option<f64>,
    /// Blow-up threshold on the solution norm.
    #[arg(long)]
    cap: Option<f64>,
}

fn run(cli: &Cli) -> Result<i32, CommandError> {
    let command: Command = cli.command.parse()?;
    let cfg = load_with_overrides(&cli.config, cli.horizon, cli.rtol, cli.cap)?;
    let out_dir = cli
        .out
        .clone()
        .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let opts = RunOptions {
        out_dir,
        svg: cli.svg || cfg.output.svg,
    };
    let outcome = run_command(command, &cfg, &opts)?;
    for line in &outcome.messages {
        println!("{line}");
    }
    for path in &outcome.artifacts {
        println!("wrote {}", path.display());
    }
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
