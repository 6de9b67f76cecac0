use std::path::PathBuf;
use std::process::ExitCode;

use adaptive_tdvp::config::{parse_config, Mode};
use adaptive_tdvp::sim::run_simulation;
use adaptive_tdvp::Error;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "adaptive-tdvp", version, about = "Adaptive one-site TDVP for the two-bath spin-boson model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation described by a key=value config file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `mode` from the config.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Adaptive,
    Fixed,
}

fn simulate(config: PathBuf, out: Option<PathBuf>, mode: Option<ModeArg>) -> adaptive_tdvp::Result<()> {
    let text = std::fs::read_to_string(&config)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", config.display())))?;
    let mut cfg = parse_config(&text)?;
    if let Some(dir) = out {
        cfg.output_dir = Some(dir);
    }
    if let Some(m) = mode {
        cfg.mode = match m {
            ModeArg::Adaptive => Mode::Adaptive,
            ModeArg::Fixed => Mode::Fixed,
        };
    }
    cfg.validate()?;
    let manifest = run_simulation(&cfg)?;
    let dir = cfg.output_dir.as_deref().expect("checked by run_simulation");
    println!(
        "{} steps in {:.2} s, results in {}",
        manifest.steps,
        manifest.wall_time.as_secs_f64(),
        dir.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { config, out, mode } => simulate(config, out, mode),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
