use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{GridSpec, Method};

#[derive(Debug, Parser)]
#[command(name = "cs-stap", version, about = "Sparse-recovery clutter suppression for space-time radar data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a data cube from a scene or preset description.
    Simulate(CommonArgs),
    /// Filter one or more range cells and write angle-Doppler maps.
    Filter(CommonArgs),
    /// Angle or range cut through the filter outputs.
    Scan(CommonArgs),
    /// Run several methods on the target cell and report their SCR improvement.
    Compare(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON configuration, or a manifest.json from an earlier run.
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Overrides the configured method (and the method list for scan/compare).
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write per-iteration solver traces.
    #[arg(long)]
    pub trace: bool,
    /// Angle-Doppler grid as NSxND.
    #[arg(long, value_name = "NSxND")]
    pub grid: Option<GridSpec>,
}
