use std::process::ExitCode;

fn main() -> ExitCode {
    apf_cli::run(std::env::args_os())
}
