use std::process::ExitCode;

use clap::Parser;
use flowergm_cli::artifacts::write_atomic;
use flowergm_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = e.record(cli.command.name());
            let text =
                serde_json::to_string(&record).unwrap_or_else(|_| format!("{{\"status\":\"error\",\"message\":{:?}}}", e.to_string()));
            eprintln!("{text}");
            if let Some(dir) = cli.command.out_dir() {
                if let Err(w) = write_atomic(&dir.join("error.json"), format!("{text}\n").as_bytes()) {
                    eprintln!("could not write error.json: {w}");
                }
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
