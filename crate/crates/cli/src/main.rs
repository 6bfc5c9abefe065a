use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lavrentiev::commands::{run_forward, run_invert, run_rates, RunOutput};
use lavrentiev::config::Config;
use lavrentiev::Error;

#[derive(Parser)]
#[command(name = "lavrentiev", version, about = "Space-time source identification with TV-Lavrentiev regularization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the forward problem for the configured source.
    Forward(Common),
    /// Reconstruct the source from synthetic noisy data.
    Invert(Common),
    /// Halve noise and weights together and fit convergence slopes.
    Rates(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Built-in preset used as the base configuration.
    #[arg(long)]
    preset: Option<String>,
    /// Noise seed, overriding the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// `section.key=value`; may be repeated.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

fn load(common: &Common) -> Result<Config, Error> {
    let text = match &common.config {
        Some(p) => Some(
            fs::read_to_string(p).map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?,
        ),
        None => None,
    };
    let mut overrides = common.overrides.clone();
    if let Some(seed) = common.seed {
        overrides.push(format!("noise.seed={seed}"));
    }
    Config::resolve(text.as_deref(), common.preset.as_deref(), &overrides)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, run): (&Common, fn(&Config) -> lavrentiev::Result<RunOutput>) = match &cli.command {
        Command::Forward(c) => (c, run_forward),
        Command::Invert(c) => (c, run_invert),
        Command::Rates(c) => (c, run_rates),
    };
    let cfg = match load(common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let result = run(&cfg).and_then(|out| out.write_to(&common.out));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { EXIT_CONFIG } else { EXIT_NUMERIC })
        }
    }
}
