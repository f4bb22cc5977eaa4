use std::process::ExitCode;

use clap::Parser;
use nuclear_scale::cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            println!("{}", serde_json::to_string_pretty(&outcome.report).expect("report serializes"));
            ExitCode::from(outcome.exit_code())
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}
