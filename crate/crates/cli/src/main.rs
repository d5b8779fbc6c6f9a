use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(spikext::run(std::env::args_os()))
}
