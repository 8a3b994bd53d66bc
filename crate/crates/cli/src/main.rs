//! `fks` command-line driver.
//!
//! Exit codes: 0 completed, 10 blow-up, 11 step underflow, 2 invalid
//! configuration, 1 I/O or other failure. `check` exits 1 when any flag
//! fails on any snapshot.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fks_core::runner::{self, check_run, execute, load_config, run_sweep, SweepSpec};
use fks_core::Error;

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "fks",
    version,
    about = "Fractional Keller-Segel chemotaxis simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one simulation.
    Simulate {
        /// JSON config; optional when a preset is given.
        config: Option<PathBuf>,
        /// Run directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// fractional, classical, mesenchymal or custom.
        #[arg(long)]
        preset: Option<String>,
        /// Override a config value, e.g. `initial_condition.mass=50`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Run a parameter sweep or a collapse-threshold bisection.
    Sweep {
        spec: PathBuf,
        /// Parallel members; overrides `max_parallel`.
        #[arg(long)]
        jobs: Option<usize>,
        /// Sweep directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute invariant flags from a run directory's snapshots.
    Check { run_dir: PathBuf },
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(if e.is_config_error() {
        EXIT_CONFIG
    } else {
        EXIT_FAILURE
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate {
            config,
            out,
            preset,
            set,
        } => {
            if config.is_none() && preset.is_none() {
                eprintln!("error: give a config file or --preset");
                return ExitCode::from(EXIT_CONFIG);
            }
            let cfg = match load_config(config.as_deref(), preset.as_deref(), &set) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            let dir = runner::run_dir(out, &cfg);
            match execute(&cfg, &dir) {
                Ok(rep) => {
                    println!(
                        "{}: t = {:.6e}, {} steps, {} rejections, sup |rho| = {:.6e}, flags {}",
                        rep.status.label(),
                        rep.t_final,
                        rep.steps,
                        rep.rejections,
                        rep.sup_linf_rho,
                        if rep.flags_all_ok { "ok" } else { "FAILED" },
                    );
                    println!("output: {}", dir.display());
                    ExitCode::from(rep.exit_code() as u8)
                }
                Err(e) => fail(&e),
            }
        }
        Command::Sweep { spec, jobs, out } => {
            let mut sweep = match SweepSpec::load(&spec) {
                Ok(s) => s,
                Err(e) => return fail(&e),
            };
            if let Some(j) = jobs {
                sweep.max_parallel = j;
            }
            let stem = spec
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "sweep".into());
            let dir = out.unwrap_or_else(|| runner::output_root().join(stem));
            match run_sweep(&sweep, &dir) {
                Ok(rep) => {
                    for m in &rep.members {
                        println!(
                            "{:4} {}={:.6e} {}",
                            m.index,
                            rep.parameter.tag(),
                            m.value,
                            m.status.map_or("error", |s| s.label())
                        );
                    }
                    if let Some((lo, hi)) = rep.bracket {
                        println!("bracket: [{lo:.6e}, {hi:.6e}] (ratio {:.6})", hi / lo);
                    }
                    println!("output: {}", dir.display());
                    let failed = rep.members.iter().any(|m| m.status.is_none());
                    ExitCode::from(if failed { EXIT_FAILURE } else { 0 })
                }
                Err(e) => fail(&e),
            }
        }
        Command::Check { run_dir } => match check_run(&run_dir) {
            Ok(rep) => {
                for s in &rep.snapshots {
                    let failing: Vec<&str> = s
                        .flags
                        .as_array()
                        .iter()
                        .filter(|(_, ok)| !ok)
                        .map(|(n, _)| *n)
                        .collect();
                    println!(
                        "{} t={:.6e} {}",
                        s.file,
                        s.t,
                        if failing.is_empty() {
                            "ok".to_string()
                        } else {
                            failing.join(",")
                        }
                    );
                }
                if !rep.consistent() {
                    println!("warning: recomputed flags differ from diagnostics.csv");
                }
                let ok = rep.all_ok();
                println!(
                    "{}",
                    if ok {
                        "all invariants hold"
                    } else {
                        "invariant violations found"
                    }
                );
                ExitCode::from(if ok { 0 } else { EXIT_FAILURE })
            }
            Err(e) => fail(&e),
        },
    }
}
