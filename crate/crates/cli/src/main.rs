use std::process::ExitCode;

use clap::Parser;

use ordstat_cli::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.run() {
        Ok(report) => {
            if cli.plain {
                print!("{}", report.to_plain());
            } else {
                print!("{}", report.to_toml());
            }
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.kind());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
