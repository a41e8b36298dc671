use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use formheat_cli::{run, validate, CliError, RunConfig};

#[derive(Parser)]
#[command(
    name = "formheat",
    about = "Coupled bulk-surface heat flow with degenerate diffusion"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline selected in a configuration file.
    Run { config: PathBuf },
    /// Check a configuration file without running it.
    Validate { config: PathBuf },
    /// Print the version.
    Version,
}

fn fail(err: CliError) -> ExitCode {
    eprintln!("{}", err.record());
    ExitCode::from(err.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = formheat_cli::init_threads() {
        eprintln!(
            "{}",
            serde_json::json!({ "error": { "kind": "input", "key": "FORMHEAT_THREADS", "message": msg } })
        );
        return ExitCode::from(2);
    }
    match cli.command {
        Command::Version => {
            println!("formheat {}", env!("CARGO_PKG_VERSION"));
            ExitCode::SUCCESS
        }
        Command::Run { config } => {
            let cfg = match RunConfig::load(&config) {
                Ok(c) => c,
                Err(e) => return fail(e.into()),
            };
            match run(&cfg) {
                Ok(summary) => {
                    for f in &summary.files {
                        println!("{}", summary.output.join(f).display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::Validate { config } => {
            let cfg = match RunConfig::load(&config) {
                Ok(c) => c,
                Err(e) => {
                    println!("{e}");
                    return ExitCode::from(1);
                }
            };
            let found = validate(&cfg);
            for d in &found {
                println!("{d}");
            }
            if found.is_empty() {
                println!("ok");
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}
