use std::process::ExitCode;

use gdfpca::harness::{run, standardize_cli, CliError};

fn main() -> ExitCode {
    let invocation = match standardize_cli(std::env::args_os()) {
        Ok(inv) => inv,
        Err(CliError::Clap(e)) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
        Err(CliError::Invalid(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(&invocation) {
        Ok(outputs) => {
            for file in outputs.files {
                println!("{}", file.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
