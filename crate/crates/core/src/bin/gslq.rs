use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(gslq::cli::main_with(std::env::args_os()))
}
