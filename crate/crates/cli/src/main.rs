use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nlcomp::commands::{cmd_compare, cmd_filter, cmd_pulse, cmd_sweep, cmd_train};
use nlcomp::{resolve_out_dir, CliError, ExperimentConfig, Profile};

#[derive(Parser)]
#[command(
    name = "nlcomp",
    version,
    about = "Nonlinear LMS pre-compensation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// TOML scenario file, overlaid on the profile.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to $NLCOMP_OUT.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    profile: Option<Profile>,
}

#[derive(Subcommand)]
enum Command {
    /// Single pulse, pulse train and their spectra.
    Pulse(Common),
    /// Channel filter taps and frequency response.
    Filter(Common),
    /// Train the pre-compensator.
    Train(Common),
    /// Conventional against improved training, with sign analysis.
    Compare(Common),
    /// One training run per value of the configured sweep parameter.
    Sweep(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, run): (_, fn(&ExperimentConfig, &std::path::Path) -> _) = match cli.command {
        Command::Pulse(c) => (c, cmd_pulse),
        Command::Filter(c) => (c, cmd_filter),
        Command::Train(c) => (c, cmd_train),
        Command::Compare(c) => (c, cmd_compare),
        Command::Sweep(c) => (c, cmd_sweep),
    };
    let result = std::fs::read_to_string(&common.config)
        .map_err(|e| CliError::Io(format!("{}: {e}", common.config.display())))
        .and_then(|text| ExperimentConfig::load(&text, common.profile))
        .and_then(|cfg| {
            for w in cfg.warnings() {
                eprintln!("warning: {w}");
            }
            let dir = resolve_out_dir(common.out, &cfg);
            run(&cfg, &dir)
        });
    match result {
        Ok(summary) => {
            print!("{}", summary.to_toml());
            ExitCode::from(summary.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("nlcomp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
