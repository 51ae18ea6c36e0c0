use std::process::ExitCode;

use clap::Parser;
use profilium::cli::{error_record, run, Cli, RunConfig};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let record = serde_json::json!({ "error": "usage", "message": e.to_string().trim(), "exit_code": 2 });
            eprintln!("{record}");
            return ExitCode::from(2);
        }
    };
    match RunConfig::resolve(cli).and_then(|cfg| run(&cfg)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_record(&e));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
