#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod error;
mod io;
mod manifest;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::Cli;
use commands::Context;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PRECIP_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(4),
            };
        }
    };
    let mut command = cli.command;
    if let Err(e) = command.absolutize() {
        eprintln!("wetspell: input error: {e}");
        return ExitCode::from(2);
    }
    let ctx = Context {
        seed: cli.seed,
        threads: cli.threads,
    };
    match commands::execute(&command, ctx) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("wetspell: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
