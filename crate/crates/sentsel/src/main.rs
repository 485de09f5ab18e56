use clap::error::ErrorKind;
use clap::Parser;

use sentsel::cli::{run, Cli, CliError, EXIT_USAGE};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) if matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{err}");
            std::process::exit(0);
        }
        Err(err) => {
            let failure = CliError::Usage(err.to_string());
            eprintln!("{}", failure.to_json_line());
            std::process::exit(EXIT_USAGE);
        }
    };
    if let Err(err) = run(&cli) {
        eprintln!("{}", err.to_json_line());
        std::process::exit(err.exit_code());
    }
}
