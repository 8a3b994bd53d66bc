//! Parameter sweeps and collapse-threshold bisection.
//!
//! Members run on a bounded thread pool, each in its own directory
//! `member_NNNN`. Bisection brackets the parameter value where the outcome
//! switches between collapse (`BlowUp`) and no collapse, evaluating
//! `max_parallel` geometrically spaced interior points per round.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::diagnostics::fmt_f64;
use crate::error::{Error, Result};
use crate::operators::DispersalOperator;
use crate::runner::config::{layer, read_json, SimConfig, SystemMode};
use crate::runner::output::{execute, write_json};
use crate::stepper::Status;

pub const SWEEP_CSV: &str = "sweep.csv";
pub const SWEEP_REPORT: &str = "sweep_report.json";

pub const SWEEP_HEADER: &str =
    "index,parameter,value,status,exit_code,t_final,t_star_lo,t_star_hi,\
x_site,steps,rejections,sup_linf_rho,flags_all_ok,error,directory";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Mass,
    Alpha,
    Delta,
}

impl SweepParameter {
    pub fn tag(&self) -> &'static str {
        match self {
            SweepParameter::Mass => "mass",
            SweepParameter::Alpha => "alpha",
            SweepParameter::Delta => "delta",
        }
    }

    /// `base` with the parameter set to `value`, revalidated.
    pub fn apply(&self, base: &SimConfig, value: f64) -> Result<SimConfig> {
        let mut cfg = base.clone();
        match self {
            SweepParameter::Mass => cfg.initial_condition.set_mass(value, cfg.grid.length),
            SweepParameter::Alpha => match cfg.operator {
                DispersalOperator::Riesz { .. } => {
                    cfg.operator = DispersalOperator::Riesz { alpha: value }
                }
                other => {
                    return Err(Error::Sweep(format!(
                        "cannot sweep alpha with the {} operator",
                        other.tag()
                    )))
                }
            },
            SweepParameter::Delta => {
                if cfg.system == SystemMode::Dimensional {
                    return Err(Error::Sweep("delta is derived in dimensional mode".into()));
                }
                cfg.chemo.delta = value;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepMode {
    Values(Vec<f64>),
    Bisection { lo: f64, hi: f64, tol: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: SimConfig,
    pub parameter: SweepParameter,
    pub mode: SweepMode,
    pub max_parallel: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    base: Option<Value>,
    base_file: Option<PathBuf>,
    preset: Option<String>,
    #[serde(default)]
    set: Vec<String>,
    parameter: SweepParameter,
    values: Option<Vec<f64>>,
    bisection: Option<RawBisection>,
    max_parallel: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBisection {
    lo: f64,
    hi: f64,
    tol: f64,
}

impl SweepSpec {
    /// Parses a sweep file. `base_file` is relative to the sweep file.
    pub fn load(path: &Path) -> Result<Self> {
        let value = read_json(path)?;
        Self::from_value(&value, path.parent())
    }

    pub fn from_value(value: &Value, relative_to: Option<&Path>) -> Result<Self> {
        let raw: RawSweep = serde_path_to_error::deserialize(value)
            .map_err(|e| Error::config(e.path().to_string(), e.into_inner().to_string()))?;
        let base = match (raw.base, raw.base_file) {
            (Some(_), Some(_)) => {
                return Err(Error::config("base", "give either base or base_file"))
            }
            (Some(v), None) => Some(v),
            (None, Some(f)) => {
                let f = match relative_to {
                    Some(dir) if f.is_relative() => dir.join(f),
                    _ => f,
                };
                Some(read_json(&f)?)
            }
            (None, None) => None,
        };
        let base = SimConfig::from_value(&layer(base, raw.preset.as_deref(), &raw.set)?)?;
        let mode = match (raw.values, raw.bisection) {
            (Some(v), None) => SweepMode::Values(v),
            (None, Some(b)) => SweepMode::Bisection {
                lo: b.lo,
                hi: b.hi,
                tol: b.tol,
            },
            _ => {
                return Err(Error::config(
                    "values",
                    "give exactly one of values or bisection",
                ))
            }
        };
        let spec = SweepSpec {
            base,
            parameter: raw.parameter,
            mode,
            max_parallel: raw.max_parallel.unwrap_or(1),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_parallel == 0 {
            return Err(Error::config("max_parallel", "must be at least 1"));
        }
        let check = |v: f64, at: &str| -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::config(at, format!("must be positive, got {v}")))
            }
        };
        match &self.mode {
            SweepMode::Values(v) => {
                if v.is_empty() {
                    return Err(Error::config("values", "must not be empty"));
                }
                for (i, x) in v.iter().enumerate() {
                    check(*x, &format!("values[{i}]"))?;
                }
            }
            SweepMode::Bisection { lo, hi, tol } => {
                check(*lo, "bisection.lo")?;
                check(*hi, "bisection.hi")?;
                check(*tol, "bisection.tol")?;
                if lo >= hi {
                    return Err(Error::config("bisection", "need lo < hi"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemberResult {
    pub index: usize,
    pub value: f64,
    /// `None` when the member failed before or while running.
    pub status: Option<Status>,
    pub t_final: f64,
    pub steps: u64,
    pub rejections: u64,
    pub sup_linf_rho: f64,
    pub flags_all_ok: bool,
    pub error: Option<String>,
    pub directory: String,
}

impl MemberResult {
    pub fn exit_code(&self) -> i32 {
        match self.status {
            Some(s) => s.exit_code(),
            None => 1,
        }
    }

    pub fn collapsed(&self) -> Option<bool> {
        self.status.map(|s| matches!(s, Status::BlowUp { .. }))
    }

    fn csv_row(&self, parameter: SweepParameter) -> String {
        let (lo, hi, x) = match self.status {
            Some(Status::BlowUp { t_star, x_site }) => {
                (fmt_f64(t_star.0), fmt_f64(t_star.1), fmt_f64(x_site))
            }
            _ => (String::new(), String::new(), String::new()),
        };
        let error = self
            .error
            .as_deref()
            .map(|e| format!("\"{}\"", e.replace('"', "\"\"").replace('\n', " ")))
            .unwrap_or_default();
        [
            self.index.to_string(),
            parameter.tag().to_string(),
            fmt_f64(self.value),
            self.status.map_or("error", |s| s.label()).to_string(),
            self.exit_code().to_string(),
            fmt_f64(self.t_final),
            lo,
            hi,
            x,
            self.steps.to_string(),
            self.rejections.to_string(),
            fmt_f64(self.sup_linf_rho),
            self.flags_all_ok.to_string(),
            error,
            self.directory.clone(),
        ]
        .join(",")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub parameter: SweepParameter,
    pub members: Vec<MemberResult>,
    /// Final bisection bracket, oriented `lo < hi`.
    pub bracket: Option<(f64, f64)>,
}

fn run_member(spec: &SweepSpec, out: &Path, index: usize, value: f64) -> MemberResult {
    let directory = format!("member_{index:04}");
    let mut r = MemberResult {
        index,
        value,
        status: None,
        t_final: f64::NAN,
        steps: 0,
        rejections: 0,
        sup_linf_rho: f64::NAN,
        flags_all_ok: false,
        error: None,
        directory: directory.clone(),
    };
    let outcome = spec
        .parameter
        .apply(&spec.base, value)
        .and_then(|cfg| execute(&cfg, &out.join(&directory)));
    match outcome {
        Ok(rep) => {
            r.status = Some(rep.status);
            r.t_final = rep.t_final;
            r.steps = rep.steps;
            r.rejections = rep.rejections;
            r.sup_linf_rho = rep.sup_linf_rho;
            r.flags_all_ok = rep.flags_all_ok;
        }
        Err(e) => r.error = Some(e.to_string()),
    }
    r
}

struct Driver<'a> {
    spec: &'a SweepSpec,
    out: &'a Path,
    pool: rayon::ThreadPool,
    members: Vec<MemberResult>,
}

impl Driver<'_> {
    fn batch(&mut self, values: &[f64]) -> Vec<MemberResult> {
        let start = self.members.len();
        let (spec, out) = (self.spec, self.out);
        let results: Vec<MemberResult> = self.pool.install(|| {
            values
                .par_iter()
                .enumerate()
                .map(|(i, v)| run_member(spec, out, start + i, *v))
                .collect()
        });
        self.members.extend(results.iter().cloned());
        results
    }
}

fn outcome_of(r: &MemberResult) -> Result<bool> {
    r.collapsed().ok_or_else(|| {
        Error::Sweep(format!(
            "member {} at {} failed: {}",
            r.index,
            r.value,
            r.error.as_deref().unwrap_or("unknown error")
        ))
    })
}

/// Runs every member and writes `sweep.csv` and `sweep_report.json` into
/// `out`. Aggregates are written even when bisection fails.
pub fn run_sweep(spec: &SweepSpec, out: &Path) -> Result<SweepReport> {
    spec.validate()?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.max_parallel)
        .build()
        .map_err(|e| Error::Sweep(format!("thread pool: {e}")))?;
    let mut driver = Driver {
        spec,
        out,
        pool,
        members: Vec::new(),
    };

    let (bracket, failure) = match &spec.mode {
        SweepMode::Values(values) => {
            driver.batch(values);
            (None, None)
        }
        SweepMode::Bisection { lo, hi, tol } => match bisect(&mut driver, *lo, *hi, *tol) {
            Ok(b) => (Some(b), None),
            Err(e) => (None, Some(e)),
        },
    };

    let report = SweepReport {
        parameter: spec.parameter,
        members: driver.members,
        bracket,
    };
    write_aggregates(spec, &report, out, failure.as_ref())?;
    match failure {
        Some(e) => Err(e),
        None => Ok(report),
    }
}

fn bisect(driver: &mut Driver<'_>, mut lo: f64, mut hi: f64, tol: f64) -> Result<(f64, f64)> {
    let ends = driver.batch(&[lo, hi]);
    let lo_collapsed = outcome_of(&ends[0])?;
    let hi_collapsed = outcome_of(&ends[1])?;
    if lo_collapsed == hi_collapsed {
        return Err(Error::Sweep(format!(
            "bracket endpoints {lo} and {hi} have the same outcome ({})",
            if lo_collapsed {
                "collapse"
            } else {
                "no collapse"
            }
        )));
    }
    let p = driver.spec.max_parallel;
    while hi / lo > 1.0 + tol {
        let ratio = hi / lo;
        let points: Vec<f64> = (1..=p)
            .map(|i| lo * ratio.powf(i as f64 / (p + 1) as f64))
            .filter(|v| *v > lo && *v < hi)
            .collect();
        if points.is_empty() {
            break;
        }
        let results = driver.batch(&points);
        let mut new_lo = lo;
        let mut new_hi = hi;
        for (v, r) in points.iter().zip(&results) {
            if outcome_of(r)? == lo_collapsed {
                new_lo = *v;
            } else {
                new_hi = *v;
                break;
            }
        }
        lo = new_lo;
        hi = new_hi;
    }
    Ok((lo, hi))
}

fn write_aggregates(
    spec: &SweepSpec,
    report: &SweepReport,
    out: &Path,
    failure: Option<&Error>,
) -> Result<()> {
    let mut csv = String::from(SWEEP_HEADER);
    csv.push('\n');
    for m in &report.members {
        csv.push_str(&m.csv_row(spec.parameter));
        csv.push('\n');
    }
    let path = out.join(SWEEP_CSV);
    std::fs::write(&path, csv).map_err(|e| Error::io(&path, e))?;

    let mode = match &spec.mode {
        SweepMode::Values(v) => json!({ "values": v }),
        SweepMode::Bisection { lo, hi, tol } => {
            json!({ "bisection": { "lo": lo, "hi": hi, "tol": tol } })
        }
    };
    let report_json = json!({
        "parameter": spec.parameter.tag(),
        "mode": mode,
        "max_parallel": spec.max_parallel,
        "members": report.members.len(),
        "failed_members": report.members.iter().filter(|m| m.status.is_none()).count(),
        "bracket": report.bracket.map(|(a, b)| [a, b]),
        "bracket_ratio": report.bracket.map(|(a, b)| b / a),
        "error": failure.map(|e| e.to_string()),
        "base": spec.base.to_value(),
    });
    write_json(&out.join(SWEEP_REPORT), &report_json)
}
