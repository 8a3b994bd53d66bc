//! Re-evaluation of invariant flags from a run directory's snapshots.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::chemo::{solve_elliptic, ChemoMode};
use crate::diagnostics::{annotate, measure, DiagnosticsRecord, InvariantFlags};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::runner::config::{read_json, SimConfig};
use crate::runner::output::{
    load_snapshot, CONFIG_FILE, DIAGNOSTICS_FILE, METADATA_FILE, SNAPSHOT_DIR,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotCheck {
    pub file: String,
    pub t: f64,
    pub flags: InvariantFlags,
    pub mass_drift_rel: f64,
    /// Whether the flags agree with the stored diagnostics row, when there
    /// is one at the same time.
    pub matches_diagnostics: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub dir: PathBuf,
    pub snapshots: Vec<SnapshotCheck>,
}

impl CheckReport {
    pub fn all_ok(&self) -> bool {
        self.snapshots.iter().all(|s| s.flags.all())
    }

    pub fn consistent(&self) -> bool {
        self.snapshots
            .iter()
            .all(|s| s.matches_diagnostics != Some(false))
    }
}

/// Snapshot list from metadata, or from the snapshot directory when the
/// metadata is missing.
fn snapshot_list(dir: &Path) -> Result<Vec<(String, Option<f64>)>> {
    let meta_path = dir.join(METADATA_FILE);
    if meta_path.is_file() {
        let meta = read_json(&meta_path)?;
        if let Some(list) = meta.get("snapshots").and_then(|s| s.as_array()) {
            return list
                .iter()
                .map(|s| {
                    let file = s.get("file").and_then(|f| f.as_str());
                    let t = s.get("t").and_then(|t| t.as_f64());
                    match file {
                        Some(f) => Ok((f.to_string(), t)),
                        None => Err(Error::Artifact {
                            path: meta_path.clone(),
                            message: "snapshot entry without a file".into(),
                        }),
                    }
                })
                .collect();
        }
    }
    let snaps = dir.join(SNAPSHOT_DIR);
    let mut names: Vec<String> = fs::read_dir(&snaps)
        .map_err(|e| Error::io(&snaps, e))?
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().into_string().ok())
        .filter(|n| n.starts_with("snap_") && n.ends_with(".csv"))
        .map(|n| format!("{SNAPSHOT_DIR}/{n}"))
        .collect();
    names.sort();
    Ok(names.into_iter().map(|n| (n, None)).collect())
}

fn stored_diagnostics(dir: &Path) -> Result<Vec<DiagnosticsRecord>> {
    let path = dir.join(DIAGNOSTICS_FILE);
    if !path.is_file() {
        return Ok(Vec::new());
    }
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    text.lines()
        .skip(1)
        .filter(|l| !l.is_empty())
        .map(DiagnosticsRecord::parse_csv_row)
        .collect()
}

pub fn check_run(dir: &Path) -> Result<CheckReport> {
    let config = SimConfig::from_value(&read_json(&dir.join(CONFIG_FILE))?)?;
    let grid = Arc::new(Grid::new(config.grid.n, config.grid.length)?);
    let list = snapshot_list(dir)?;
    if list.is_empty() {
        return Err(Error::Artifact {
            path: dir.to_path_buf(),
            message: "no snapshots".into(),
        });
    }
    let stored = stored_diagnostics(dir)?;
    let delta = config.chemo.delta;

    let mut initial: Option<DiagnosticsRecord> = None;
    let mut out = Vec::with_capacity(list.len());
    for (i, (file, t)) in list.into_iter().enumerate() {
        let path = dir.join(&file);
        let (rho, c) = load_snapshot(&path, &grid)?;
        let c = match (c, config.chemo.mode) {
            (Some(c), _) => c,
            (None, ChemoMode::Elliptic) => solve_elliptic(&rho, delta)?,
            (None, ChemoMode::Parabolic { .. }) => {
                return Err(Error::Artifact {
                    path,
                    message: "parabolic-mode snapshot without a c column".into(),
                })
            }
        };
        let row = stored.get(i);
        let t = t.or(row.map(|r| r.t)).unwrap_or(f64::NAN);
        let dt = row.filter(|r| r.t == t).map_or(f64::NAN, |r| r.dt);
        let mut rec = measure(&rho, &c, &config.operator, t, dt)?;
        let reference = *initial.get_or_insert(rec);
        annotate(&mut rec, &reference, delta, &config.tolerances)?;
        out.push(SnapshotCheck {
            file,
            t,
            flags: rec.flags,
            mass_drift_rel: rec.mass_drift_rel,
            matches_diagnostics: row.filter(|r| r.t == t).map(|r| r.flags == rec.flags),
        });
    }
    Ok(CheckReport {
        dir: dir.to_path_buf(),
        snapshots: out,
    })
}
