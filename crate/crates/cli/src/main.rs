use std::process::ExitCode;

fn main() -> ExitCode {
    // A panic is an internal error: exit 2.
    let code = std::panic::catch_unwind(|| hyperbin_cli::run(std::env::args_os())).unwrap_or(2);
    ExitCode::from(code as u8)
}
