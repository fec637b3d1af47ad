use std::process::ExitCode;

fn main() -> ExitCode {
    kloostpath::cli::run(std::env::args_os())
}
