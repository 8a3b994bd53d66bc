//! Configuration, presets, run directories, sweeps and re-checking.

pub mod check;
pub mod config;
pub mod output;
pub mod presets;
pub mod sweep;

use std::path::PathBuf;

pub use check::{check_run, CheckReport};
pub use config::{load_config, SimConfig, SystemMode};
pub use output::{execute, RunReport};
pub use sweep::{run_sweep, SweepSpec};

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_ENV: &str = "FKS_OUTPUT_ROOT";

/// Output root from the environment, `runs` when unset.
pub fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("runs"))
}

/// Run directory: the explicit one, else the config's, else
/// `<root>/<preset>`.
pub fn run_dir(explicit: Option<PathBuf>, config: &SimConfig) -> PathBuf {
    explicit
        .or_else(|| config.output.directory.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| output_root().join(&config.preset))
}
