use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(fbh::run(std::env::args_os()) as u8)
}
