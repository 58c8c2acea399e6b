use std::process::ExitCode;

use clap::Parser;
use mgf_cli::{run, Cli, EXIT_ASSERTION, EXIT_CONFIG};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            for path in &outcome.files {
                println!("wrote {}", path.display());
            }
            if outcome.failures.is_empty() {
                println!("ok: all assertions hold");
                ExitCode::SUCCESS
            } else {
                for f in &outcome.failures {
                    eprintln!("assertion failed: {f}");
                }
                ExitCode::from(EXIT_ASSERTION)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
