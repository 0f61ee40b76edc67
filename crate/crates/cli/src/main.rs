use std::process::ExitCode;

use clap::Parser;
use symchain_cli::{run, Cli, RunSpec};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json_errors = cli.options.json_errors;
    let result = RunSpec::new(cli.command, cli.options).and_then(|spec| run(&spec));
    match result {
        Ok(summary) => {
            println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            if json_errors {
                eprintln!("{}", e.to_json());
            } else {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
