use std::process::ExitCode;

use forcemeter::cli;

fn main() -> ExitCode {
    let code = cli::main_with_args(std::env::args_os(), &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
    ExitCode::from(code as u8)
}
