//! Command-line driver for constrained spin-1 PXP chains.
//!
//! Every run writes its CSV/JSON outputs plus `run_config.json` into `--out`;
//! `replay <run_config.json>` repeats a run exactly.

mod commands;
mod config;

use std::fs;
use std::process::ExitCode;

use clap::Parser;

use commands::{CliError, CliResult};
use config::Command;

#[derive(Parser)]
#[command(name = "spin1-pxp", version, about = "Constrained spin-1 PXP chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn run(command: Command) -> CliResult<()> {
    let command = match command {
        Command::Replay { config } => {
            let text = fs::read_to_string(&config)?;
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", config.display())))?
        }
        other => other,
    };
    let common = command.common().expect("replay resolved above");
    spin1_pxp::set_workers(common.workers);
    let out = common.out.clone();
    fs::create_dir_all(&out)?;
    fs::write(out.join("run_config.json"), serde_json::to_string_pretty(&command).unwrap() + "\n")?;

    let summary = match &command {
        Command::Basis(a) => commands::basis(a, &out)?,
        Command::Spectrum(a) => commands::spectrum(a, &out)?,
        Command::Fragments(a) => commands::fragments(a, &out)?,
        Command::Fsa(a) => commands::fsa(a, &out)?,
        Command::Quench(a) => commands::quench(a, &out)?,
        Command::Entropy(a) => commands::entropy(a, &out)?,
        Command::Verify(a) => commands::verify(a, &out)?,
        Command::Replay { .. } => unreachable!(),
    };
    let name = match &command {
        Command::Basis(_) => "basis",
        Command::Spectrum(_) => "spectrum",
        Command::Fragments(_) => "fragments",
        Command::Fsa(_) => "fsa",
        Command::Quench(_) => "quench",
        Command::Entropy(_) => "entropy",
        Command::Verify(_) => "verify",
        Command::Replay { .. } => unreachable!(),
    };
    let text = serde_json::to_string_pretty(&summary).unwrap() + "\n";
    fs::write(out.join(format!("{name}.json")), &text)?;
    if name != "verify" {
        print!("{text}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
