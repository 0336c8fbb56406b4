use std::process::ExitCode;

fn main() -> ExitCode {
    techtime::cli::main_with_args(std::env::args_os())
}
