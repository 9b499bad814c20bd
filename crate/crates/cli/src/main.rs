//! Binary entry point. Argument parsing (and usage errors, exit 2) belong to
//! clap; operational failures print one line to stderr and exit 1.

use clap::Parser;
use tracing_subscriber::EnvFilter;

fn main() {
    let filter = EnvFilter::try_from_env("PMASCAN_LOG").unwrap_or_else(|_| EnvFilter::new("info"));
    tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .init();

    let cli = pmascan::Cli::parse();
    if let Err(err) = pmascan::run(cli) {
        eprintln!("pmascan: {err:#}");
        std::process::exit(1);
    }
}
