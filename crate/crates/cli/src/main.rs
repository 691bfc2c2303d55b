use std::process::ExitCode;

fn main() -> ExitCode {
    tabletop_cli::run(std::env::args_os())
}
