use std::process::ExitCode;

fn main() -> ExitCode {
    ganlab_cli::main_with(std::env::args_os())
}
