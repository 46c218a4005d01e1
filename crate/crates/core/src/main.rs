use std::process::ExitCode;

fn main() -> ExitCode {
    tweezer_exchange::cli::run(std::env::args_os())
}
