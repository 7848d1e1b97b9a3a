use std::process::ExitCode;

use clap::Parser;
use glucopt::{run, Cli};

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok((summary, quiet)) => {
            if !quiet {
                print!("{summary}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("glucopt: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
