//! Command-line front end: `ergohorizon <subcommand> --config <path> [--out <dir>]`.

pub mod config;
pub mod output;
pub mod run;
pub mod svg;

use std::path::PathBuf;

use clap::Parser;

pub use config::{parse_config, ConfigError, Format, RunConfig};
pub use run::{run, run_with_config, Artifacts, CliError, HorizonDoc, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "ergohorizon", version, about = "Ergospheres and event horizons of planar acoustic metrics")]
pub struct Args {
    #[arg(value_enum)]
    pub subcommand: Subcommand,
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output.directory`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses arguments, runs the subcommand and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(args.subcommand, &args.config, args.out.as_deref()) {
        Ok(art) => {
            for f in &art.files {
                log::info!("wrote {}", art.dir.join(f).display());
            }
            0
        }
        Err(e) => {
            eprintln!("ergohorizon: {e}");
            e.exit_code()
        }
    }
}
