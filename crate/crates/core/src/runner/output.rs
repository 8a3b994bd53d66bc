//! Run directories.
//!
//! ```text
//! <run>/config.json          resolved config
//! <run>/diagnostics.csv      one row per output time
//! <run>/snapshots/snap_NNNNNN.csv
//! <run>/final_state.csv
//! <run>/final_physical.csv   dimensional mode only
//! <run>/metadata.json
//! ```
//!
//! Nothing time- or host-dependent is written, so reruns are byte-identical.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde_json::{json, Value};

use crate::chemo::ChemoMode;
use crate::diagnostics::{fmt_f64, DiagnosticsRecord, CSV_HEADER};
use crate::error::{Error, Result};
use crate::grid::{Grid, RealField};
use crate::runner::config::{SimConfig, SnapshotField, SystemMode};
use crate::stepper::{run_with_observer, SimState, Status};

pub const CONFIG_FILE: &str = "config.json";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const SNAPSHOT_DIR: &str = "snapshots";
pub const FINAL_STATE_FILE: &str = "final_state.csv";
pub const FINAL_PHYSICAL_FILE: &str = "final_physical.csv";
pub const METADATA_FILE: &str = "metadata.json";

pub fn snapshot_name(index: usize) -> String {
    format!("{SNAPSHOT_DIR}/snap_{index:06}.csv")
}

/// Outcome of a run written to disk.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub dir: PathBuf,
    pub status: Status,
    pub t_final: f64,
    pub steps: u64,
    pub rejections: u64,
    pub sup_linf_rho: f64,
    pub flags_all_ok: bool,
    pub snapshots: usize,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        self.status.exit_code()
    }
}

/// Columns of a field table.
pub fn field_table(x: &[f64], columns: &[(&str, &[f64])]) -> String {
    let mut out = String::with_capacity(x.len() * 24 * (1 + columns.len()));
    out.push('x');
    for (name, _) in columns {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (m, xm) in x.iter().enumerate() {
        out.push_str(&fmt_f64(*xm));
        for (_, col) in columns {
            out.push(',');
            out.push_str(&fmt_f64(col[m]));
        }
        out.push('\n');
    }
    out
}

/// Parsed field table: header names after `x`, then the columns.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldTable {
    pub names: Vec<String>,
    pub x: Vec<f64>,
    pub columns: Vec<Vec<f64>>,
}

impl FieldTable {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| &self.columns[i][..])
    }
}

pub fn read_field_table(path: &Path) -> Result<FieldTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |message: String| Error::Artifact {
        path: path.to_path_buf(),
        message,
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty file".into()))?;
    let mut names = header.split(',');
    if names.next() != Some("x") {
        return Err(bad("first column must be x".into()));
    }
    let names: Vec<String> = names.map(str::to_string).collect();
    let mut x = Vec::new();
    let mut columns = vec![Vec::new(); names.len()];
    for (i, line) in lines.enumerate() {
        let mut cells = line.split(',');
        let parse = |s: Option<&str>| -> Result<f64> {
            s.ok_or_else(|| bad(format!("row {}: too few columns", i + 1)))?
                .parse()
                .map_err(|e| bad(format!("row {}: {e}", i + 1)))
        };
        x.push(parse(cells.next())?);
        for col in columns.iter_mut() {
            col.push(parse(cells.next())?);
        }
        if cells.next().is_some() {
            return Err(bad(format!("row {}: too many columns", i + 1)));
        }
    }
    Ok(FieldTable { names, x, columns })
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(path, &text)
}

/// Removes snapshot files left by an earlier run in the same directory.
fn clear_snapshots(dir: &Path) -> Result<()> {
    let snaps = dir.join(SNAPSHOT_DIR);
    if snaps.is_dir() {
        for entry in fs::read_dir(&snaps).map_err(|e| Error::io(&snaps, e))? {
            let path = entry.map_err(|e| Error::io(&snaps, e))?.path();
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
            if name.starts_with("snap_") && name.ends_with(".csv") {
                fs::remove_file(&path).map_err(|e| Error::io(&path, e))?;
            }
        }
    }
    fs::create_dir_all(&snaps).map_err(|e| Error::io(&snaps, e))
}

fn snapshot_text(config: &SimConfig, state: &SimState) -> String {
    let g = state.grid();
    let x = g.points();
    let mut cols: Vec<(&str, &[f64])> = Vec::new();
    for f in &config.output.snapshot_fields {
        match f {
            SnapshotField::Rho => cols.push(("rho", state.rho.values())),
            SnapshotField::C => cols.push(("c", state.c.values())),
        }
    }
    field_table(&x, &cols)
}

struct Progress {
    snapshots: Vec<(String, f64)>,
    last: Option<SimState>,
    flags_all_ok: bool,
}

/// Runs `config` and writes every artifact into `dir`.
pub fn execute(config: &SimConfig, dir: &Path) -> Result<RunReport> {
    config.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    clear_snapshots(dir)?;
    write_json(&dir.join(CONFIG_FILE), &config.to_value())?;

    let diag_path = dir.join(DIAGNOSTICS_FILE);
    let file = File::create(&diag_path).map_err(|e| Error::io(&diag_path, e))?;
    let mut diag = BufWriter::new(file);
    writeln!(diag, "{CSV_HEADER}").map_err(|e| Error::io(&diag_path, e))?;

    let mut progress = Progress {
        snapshots: Vec::new(),
        last: None,
        flags_all_ok: true,
    };
    let result = run_with_observer(config, |state: &SimState, rec: &DiagnosticsRecord| {
        writeln!(diag, "{}", rec.csv_row()).map_err(|e| Error::io(&diag_path, e))?;
        let name = snapshot_name(progress.snapshots.len());
        write_file(&dir.join(&name), &snapshot_text(config, state))?;
        progress.snapshots.push((name, state.t));
        progress.flags_all_ok &= rec.flags.all();
        progress.last = Some(state.clone());
        Ok(())
    });
    let flushed = diag.flush().map_err(|e| Error::io(&diag_path, e));

    let output = match result.and_then(|o| flushed.map(|_| o)) {
        Ok(o) => o,
        Err(e) => {
            let meta = json!({
                "partial": true,
                "error": e.to_string(),
                "code": code_block(),
                "grid": grid_block(config),
                "scheme": scheme_block(config),
                "status": "failed",
                "t_reached": progress.last.as_ref().map(|s| s.t),
                "snapshots": snapshot_block(&progress.snapshots),
            });
            // Best effort: the original error is the one to report.
            let _ = write_json(&dir.join(METADATA_FILE), &meta);
            return Err(e);
        }
    };

    let state = &output.final_state;
    let x = state.grid().points();
    write_file(
        &dir.join(FINAL_STATE_FILE),
        &field_table(&x, &[("rho", state.rho.values()), ("c", state.c.values())]),
    )?;
    let mut outputs = vec![CONFIG_FILE, DIAGNOSTICS_FILE, FINAL_STATE_FILE];
    if let (SystemMode::Dimensional, Some(scales)) = (config.system, config.scales) {
        let phys = scales.dimensionalize(&state.rho, &state.c)?;
        write_file(
            &dir.join(FINAL_PHYSICAL_FILE),
            &field_table(&phys.x, &[("rho", &phys.rho), ("c", &phys.c)]),
        )?;
        outputs.push(FINAL_PHYSICAL_FILE);
    }
    outputs.push(METADATA_FILE);

    let (t_star, x_site) = match state.status {
        Status::BlowUp { t_star, x_site } => (Some([t_star.0, t_star.1]), Some(x_site)),
        _ => (None, None),
    };
    let [l1, l2, l2x] = output.initial_hypotheses;
    let meta = json!({
        "partial": false,
        "error": null,
        "code": code_block(),
        "grid": grid_block(config),
        "scheme": scheme_block(config),
        "status": state.status.label(),
        "exit_code": state.status.exit_code(),
        "t_final": state.t,
        "t_final_physical": config.scales.map(|s| s.time(state.t)),
        "t_star": t_star,
        "x_site": x_site,
        "steps": state.step_count,
        "rejections": state.rejections,
        "dt_final": state.dt,
        "sup_linf_rho": output.sup_linf_rho,
        "initial_data": { "l1_rho": l1, "l2_rho": l2, "l2_rhox": l2x },
        "flags_all_ok": progress.flags_all_ok,
        "snapshots": snapshot_block(&progress.snapshots),
        "outputs": outputs,
        "scales": config.scales.map(|s| json!({
            "delta": s.delta, "tau": s.tau, "x_scale": s.x_scale,
            "t_scale": s.t_scale, "rho_scale": s.rho_scale, "c_scale": s.c_scale,
        })),
    });
    write_json(&dir.join(METADATA_FILE), &meta)?;

    Ok(RunReport {
        dir: dir.to_path_buf(),
        status: state.status,
        t_final: state.t,
        steps: state.step_count,
        rejections: state.rejections,
        sup_linf_rho: output.sup_linf_rho,
        flags_all_ok: progress.flags_all_ok,
        snapshots: progress.snapshots.len(),
    })
}

fn code_block() -> Value {
    json!({ "name": env!("CARGO_PKG_NAME"), "version": env!("CARGO_PKG_VERSION") })
}

fn grid_block(config: &SimConfig) -> Value {
    json!({
        "n": config.grid.n,
        "length": config.grid.length,
        "dx": config.grid.length / config.grid.n as f64,
    })
}

fn scheme_block(config: &SimConfig) -> Value {
    let chemo = match config.chemo.mode {
        ChemoMode::Elliptic => "elliptic solve at every stage",
        ChemoMode::Parabolic { .. } => "exact relaxation sub-step with rho frozen, once per step",
    };
    json!({
        "time": "integrating-factor RK4",
        "space": "Fourier pseudo-spectral, periodic",
        "fft": "rustfft; forward unnormalized, inverse scaled by 1/n",
        "dealiasing": "2/3 rule on rho, c_x and their product",
        "operator": config.operator.to_string(),
        "chemo": chemo,
        "c_initial": "elliptic solve of rho(0)",
    })
}

fn snapshot_block(snaps: &[(String, f64)]) -> Value {
    Value::Array(
        snaps
            .iter()
            .map(|(file, t)| json!({ "file": file, "t": t }))
            .collect(),
    )
}

/// Loads a snapshot of a run onto its grid. `c` is `None` when the
/// snapshot does not store it.
pub fn load_snapshot(path: &Path, grid: &Arc<Grid>) -> Result<(RealField, Option<RealField>)> {
    let table = read_field_table(path)?;
    let bad = |message: &str| Error::Artifact {
        path: path.to_path_buf(),
        message: message.to_string(),
    };
    if table.x.len() != grid.n() {
        return Err(bad("row count does not match the grid"));
    }
    let rho = table.column("rho").ok_or_else(|| bad("no rho column"))?;
    let rho = RealField::new(Arc::clone(grid), rho.to_vec())?;
    let c = table
        .column("c")
        .map(|c| RealField::new(Arc::clone(grid), c.to_vec()))
        .transpose()?;
    Ok((rho, c))
}
