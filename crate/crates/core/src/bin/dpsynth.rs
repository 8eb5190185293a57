use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(dpsynth::cli::run(std::env::args_os()) as u8)
}
