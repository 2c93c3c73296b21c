use std::panic;
use std::process::ExitCode;

use clap::Parser;

use previz_cli::{run, Cli, CliError};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let err = CliError::validation(e.kind().to_string());
            eprintln!("{}", e.render());
            eprintln!("{}", err.report());
            return ExitCode::from(err.exit_code());
        }
        Err(e) => {
            print!("{}", e.render());
            return ExitCode::SUCCESS;
        }
    };
    let outcome = panic::catch_unwind(|| run(cli)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(CliError::internal(format!("internal error: {msg}")))
    });
    match outcome {
        Ok(summary) => {
            if !summary.is_null() {
                println!("{}", serde_json::to_string_pretty(&summary).expect("summaries serialize"));
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.report());
            ExitCode::from(e.exit_code())
        }
    }
}
