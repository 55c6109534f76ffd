use clap::Parser;
use roadcast::cli;
use roadcast::error::Error;

fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    let parsed = match cli::Cli::try_parse() {
        Ok(parsed) => parsed,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    0
                }
                _ => {
                    eprint!("{e}");
                    1
                }
            };
        }
    };
    match cli::run(parsed) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Dimension { .. } | Error::Internal(_) => 3,
                _ => 2,
            }
        }
    }
}
