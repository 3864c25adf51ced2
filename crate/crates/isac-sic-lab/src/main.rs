use std::path::PathBuf;

use clap::Parser;

use isac_sic_lab::runner::{self, Command};

/// Sensing/communication rate experiments for a dual-function uplink
/// under both interference-cancellation orders.
#[derive(Parser)]
#[command(name = "isac-sic-lab", version)]
struct Cli {
    /// Experiment to run.
    #[arg(value_enum)]
    command: Command,

    /// TOML config file with [system], [sweep], and [run] sections.
    #[arg(long)]
    config: PathBuf,

    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,

    /// Trial-count override.
    #[arg(long)]
    trials: Option<u64>,

    /// Output directory override.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = execute(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn execute(cli: &Cli) -> isac_sic_lab::Result<()> {
    let raw = isac_sic_lab::config::load(&cli.config)?;
    let spec = runner::assemble(cli.command, &raw, cli.seed, cli.trials, cli.out.clone())?;
    let out = runner::run(&spec)?;
    for file in &out.files {
        println!("wrote {}", file.display());
    }
    if let Some(report) = out.report {
        print!("{report}");
    }
    Ok(())
}
