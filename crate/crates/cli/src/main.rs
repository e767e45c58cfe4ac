use clap::Parser;
use std::process::ExitCode;

use steklov_cli::{dispatch, Cli};

fn exit_code(e: &steklov_core::Error) -> ExitCode {
    if e.is_config() {
        ExitCode::from(2)
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(v) = std::env::var("STEKLOV_THREADS") {
        match v.trim().parse::<usize>() {
            Ok(n) => {
                // 0 leaves the choice to rayon
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("error: thread pool: {e}");
                    return ExitCode::from(1);
                }
            }
            Err(_) => {
                eprintln!("error: invalid configuration for `STEKLOV_THREADS`: expected a count, got {v:?}");
                return ExitCode::from(2);
            }
        }
    }
    let cfg = match cli.flags.resolve() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    match dispatch(cli.command, &cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
