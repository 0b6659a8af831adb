use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    let argv: Vec<String> = match std::env::args_os().map(|a| a.into_string()).collect() {
        Ok(argv) => argv,
        Err(bad) => {
            eprintln!("error: argument is not valid UTF-8: {bad:?}");
            return ExitCode::from(glauber_cli::EXIT_USAGE as u8);
        }
    };
    let code = glauber_cli::dispatch(&argv, &mut io::stdout().lock(), &mut io::stderr().lock());
    ExitCode::from(code as u8)
}
