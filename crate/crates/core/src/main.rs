use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

/// Solve l1-TV denoising or lasso problems from a config file.
#[derive(Parser)]
#[command(name = "proxmm", version)]
struct Args {
    /// Path to a `key = value` run configuration.
    config: PathBuf,
}

fn main() -> ExitCode {
    let args = Args::parse();
    ExitCode::from(proxmm::cli::run_path(&args.config) as u8)
}
