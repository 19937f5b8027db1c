use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(favard::cli::main_entry() as u8)
}
