use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(longrange_cli::main_entry())
}
