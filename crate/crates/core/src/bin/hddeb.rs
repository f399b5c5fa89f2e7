use std::process::ExitCode;

fn main() -> ExitCode {
    hddeb::cli::main_with_args(std::env::args_os())
}
