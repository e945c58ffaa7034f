use clap::Parser;
use std::process::ExitCode;

fn main() -> ExitCode {
    let cli = ww_spectra::cli::Cli::parse();
    match ww_spectra::cli::execute(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}
