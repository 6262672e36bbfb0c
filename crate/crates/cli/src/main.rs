use std::io;
use std::process::ExitCode;

use vlc_modem_cli::{execute, parse_args, ParseOutcome};

fn main() -> ExitCode {
    let inv = match parse_args(std::env::args_os()) {
        Ok(inv) => inv,
        Err(ParseOutcome::Info(text)) => {
            print!("{text}");
            return ExitCode::SUCCESS;
        }
        Err(ParseOutcome::Usage(text)) => {
            eprint!("{}", text.trim_end());
            eprintln!();
            return ExitCode::from(1);
        }
    };
    let status = execute(&inv, &mut io::stdout().lock(), &mut io::stderr().lock());
    ExitCode::from(status as u8)
}
