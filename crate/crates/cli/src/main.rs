use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use measure_balancer::commands::run;
use measure_balancer::{configure_threads, exit, Cli, THREADS_ENV};

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads(std::env::var(THREADS_ENV).ok().as_deref()) {
        eprintln!("error: {e:#}");
        return ExitCode::from(exit::INPUT_ERROR as u8);
    }
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let code = match run(&cli, &mut out) {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("error: {:#}", failure.error);
            failure.code
        }
    };
    let _ = out.flush();
    ExitCode::from(code as u8)
}
