use clap::Parser;
use doppler_cloak::cli::{run, Cli};
use std::process::ExitCode;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(manifest) => {
            println!(
                "{}: wrote {} files to {}",
                manifest.subcommand,
                manifest.files.len() + 1,
                manifest.output_dir.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("doppler-cloak {}: error: {e}", cli.command.name());
            ExitCode::FAILURE
        }
    }
}
