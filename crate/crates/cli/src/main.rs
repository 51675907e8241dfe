use clap::error::ErrorKind;
use clap::Parser;
use optomech_cli::run::{parse_config, run, Cli};
use optomech_cli::CliError;

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => fail(&CliError::Usage(e.to_string())),
    };
    match parse_config(&cli.overrides).and_then(|cfg| run(&cli.command, &cfg)) {
        Ok(summary) => print!("{summary}"),
        Err(e) => fail(&e),
    }
}

fn fail(e: &CliError) -> ! {
    eprintln!("{}", e.to_json());
    std::process::exit(e.exit_code());
}
