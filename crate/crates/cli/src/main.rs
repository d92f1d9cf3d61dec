use clap::Parser;
use tracing_subscriber::EnvFilter;

use bodyaudit_cli::args::Cli;
use bodyaudit_cli::{commands, exit};

fn main() {
    tracing_subscriber::fmt()
        .with_env_filter(
            EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    if let Err(e) = commands::dispatch(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(exit::code(&e));
    }
    std::process::exit(exit::OK);
}
