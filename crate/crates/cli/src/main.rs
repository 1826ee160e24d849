use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use sharpquad_cli::{init_threads, render, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let print_config = cli.print_config;
    let result = init_threads().and_then(|_| {
        let config = cli.into_config()?;
        if print_config {
            return Ok((render(&config)?, 0));
        }
        let outcome = run(&config)?;
        let body = if config.output.path.is_some() { String::new() } else { outcome.body.clone() };
        Ok((body, outcome.exit_code()))
    });
    match result {
        Ok((body, code)) => {
            let mut out = std::io::stdout().lock();
            if out.write_all(body.as_bytes()).and_then(|_| out.flush()).is_err() {
                return ExitCode::from(2);
            }
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
