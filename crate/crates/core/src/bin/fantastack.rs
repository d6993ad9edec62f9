use std::process::ExitCode;

fn main() -> ExitCode {
    let result = fantastack::cli::run_command(std::env::args_os());
    for line in &result.diagnostics {
        eprintln!("{line}");
    }
    print!("{}", result.payload);
    ExitCode::from(result.exit_code as u8)
}
