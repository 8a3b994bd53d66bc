//! Simulation configuration: JSON ingestion, layering and validation.
//!
//! A configuration is resolved from three layers, later ones winning:
//! the preset, the config file, and `key=value` overrides. Objects merge
//! key by key; every other value replaces. The result is validated as a
//! whole and can be echoed back with every default spelled out.

use std::path::Path;

use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::chemo::{ChemoMode, ChemoParams};
use crate::diagnostics::ToleranceSet;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::initial::{Bump, IcKind, InitialCondition};
use crate::operators::DispersalOperator;
use crate::runner::presets::preset_value;
use crate::scaling::{nondimensionalize, NondimParams, PhysicalParams};
use crate::stepper::StepControl;

/// Upper bound on the number of output times of one run.
pub const MAX_OUTPUTS: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub n: usize,
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemMode {
    /// Density equation with the elliptic attractant balance.
    ParabolicElliptic,
    /// Density equation with the relaxing attractant equation.
    FullNondimensional,
    /// Physical parameters converted by [`crate::scaling`].
    Dimensional,
}

impl SystemMode {
    pub fn tag(&self) -> &'static str {
        match self {
            SystemMode::ParabolicElliptic => "parabolic_elliptic",
            SystemMode::FullNondimensional => "full_nondimensional",
            SystemMode::Dimensional => "dimensional",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotField {
    Rho,
    C,
}

impl SnapshotField {
    pub fn tag(&self) -> &'static str {
        match self {
            SnapshotField::Rho => "rho",
            SnapshotField::C => "c",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub interval: f64,
    /// Run directory; the CLI falls back to the output root.
    pub directory: Option<String>,
    /// Snapshot columns after `x`, always in the order rho, c.
    pub snapshot_fields: Vec<SnapshotField>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub preset: String,
    pub grid: GridSpec,
    pub operator: DispersalOperator,
    pub system: SystemMode,
    pub chemo: ChemoParams,
    pub physical: Option<PhysicalParams>,
    pub scales: Option<NondimParams>,
    pub initial_condition: InitialCondition,
    pub step_control: StepControl,
    pub t_end: f64,
    pub output: OutputSpec,
    pub seed: u64,
    pub tolerances: ToleranceSet,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    preset: Option<String>,
    grid: Option<RawGrid>,
    operator: Option<OperatorTag>,
    alpha: Option<f64>,
    system: Option<SystemMode>,
    chemo_mode: Option<ModeTag>,
    delta: Option<f64>,
    tau: Option<f64>,
    physical: Option<PhysicalParams>,
    initial_condition: Option<RawIc>,
    step_control: Option<RawStep>,
    t_end: Option<f64>,
    output: Option<RawOutput>,
    seed: Option<u64>,
    tolerances: Option<RawTol>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    n: Option<usize>,
    length: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
enum OperatorTag {
    Riesz,
    Laplacian,
    Mesenchymal,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ModeTag {
    Elliptic,
    Parabolic,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
enum IcTag {
    Gaussian,
    MultiBump,
    SeededRandom,
    Uniform,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIc {
    kind: Option<IcTag>,
    mass: Option<f64>,
    width: Option<f64>,
    center: Option<f64>,
    bumps: Option<Vec<RawBump>>,
    seed: Option<u64>,
    modes: Option<usize>,
    value: Option<f64>,
    floor: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBump {
    mass: f64,
    width: f64,
    center: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStep {
    cfl: Option<f64>,
    dt_min: Option<f64>,
    dt_max: Option<f64>,
    dt_initial: Option<f64>,
    adaptive: Option<bool>,
    blowup_factor: Option<f64>,
    undershoot_tol: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    interval: Option<f64>,
    directory: Option<String>,
    snapshot_fields: Option<Vec<SnapshotField>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTol {
    mass: Option<f64>,
    inequality: Option<f64>,
    positivity: Option<f64>,
}

/// Recursive merge of `over` into `base`.
pub fn merge(base: &mut Value, over: &Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, o) => *b = o.clone(),
    }
}

/// Applies a `dotted.key=value` override. The value is parsed as JSON and
/// taken as a plain string when that fails.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::config(assignment, "override must have the form key=value"))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(Error::config(key, "empty path segment in override"));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut slot = root;
    let segments: Vec<&str> = key.split('.').collect();
    for (i, seg) in segments.iter().enumerate() {
        if !slot.is_object() {
            if slot.is_null() {
                *slot = Value::Object(Map::new());
            } else {
                let at = segments[..i].join(".");
                return Err(Error::config(
                    at,
                    "cannot set a key inside a non-object value",
                ));
            }
        }
        let map = slot.as_object_mut().expect("checked object");
        if i + 1 == segments.len() {
            map.insert(seg.to_string(), value);
            return Ok(());
        }
        slot = map.entry(seg.to_string()).or_insert(Value::Null);
    }
    unreachable!("segments is non-empty")
}

/// Reads a JSON file into a value.
pub fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::config(path.display().to_string(), format!("invalid JSON: {e}")))
}

/// Layers preset, file and overrides into one unvalidated value.
pub fn layer(file: Option<Value>, preset: Option<&str>, overrides: &[String]) -> Result<Value> {
    let file = file.unwrap_or_else(|| json!({}));
    if !file.is_object() {
        return Err(Error::config("", "config must be a JSON object"));
    }
    let name = match preset {
        Some(p) => p.to_string(),
        None => match file.get("preset") {
            None | Some(Value::Null) => "custom".to_string(),
            Some(Value::String(s)) => s.clone(),
            Some(_) => return Err(Error::config("preset", "must be a string")),
        },
    };
    let mut merged = preset_value(&name)?;
    merge(&mut merged, &file);
    for o in overrides {
        apply_override(&mut merged, o)?;
    }
    merged
        .as_object_mut()
        .expect("presets are objects")
        .insert("preset".into(), Value::String(name));
    Ok(merged)
}

/// Loads, layers and validates a config.
pub fn load_config(
    path: Option<&Path>,
    preset: Option<&str>,
    overrides: &[String],
) -> Result<SimConfig> {
    let file = path.map(read_json).transpose()?;
    SimConfig::from_value(&layer(file, preset, overrides)?)
}

fn required<T>(v: Option<T>, path: &str) -> Result<T> {
    v.ok_or_else(|| Error::config(path, "missing required value"))
}

/// Re-labels parameter errors as config errors carrying the field path.
fn at_path(e: Error) -> Error {
    match e {
        Error::InvalidParameter { name, reason } => Error::Config {
            path: name,
            message: reason,
        },
        other => other,
    }
}

impl SimConfig {
    pub fn from_value(value: &Value) -> Result<Self> {
        let raw: RawConfig = serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.into_inner().to_string())
        })?;
        Self::from_raw(raw).map_err(at_path)
    }

    fn from_raw(raw: RawConfig) -> Result<Self> {
        let grid = raw
            .grid
            .ok_or_else(|| Error::config("grid", "missing required value"))?;
        let grid = GridSpec {
            n: required(grid.n, "grid.n")?,
            length: required(grid.length, "grid.length")?,
        };

        let system = raw.system.unwrap_or(SystemMode::ParabolicElliptic);
        let physical = raw.physical;
        let mode = raw.chemo_mode.unwrap_or(match system {
            SystemMode::ParabolicElliptic => ModeTag::Elliptic,
            _ => ModeTag::Parabolic,
        });
        match (system, mode) {
            (SystemMode::ParabolicElliptic, ModeTag::Parabolic) => {
                return Err(Error::config(
                    "chemo_mode",
                    "parabolic_elliptic system requires elliptic mode",
                ));
            }
            (SystemMode::FullNondimensional, ModeTag::Elliptic) => {
                return Err(Error::config(
                    "chemo_mode",
                    "full_nondimensional system requires parabolic mode",
                ));
            }
            _ => {}
        }

        let (delta, tau, scales) = if system == SystemMode::Dimensional {
            let p = physical
                .ok_or_else(|| Error::config("physical", "required in dimensional mode"))?;
            if raw.delta.is_some() || raw.tau.is_some() {
                return Err(Error::config(
                    if raw.delta.is_some() { "delta" } else { "tau" },
                    "delta and tau are derived from the physical block in dimensional mode",
                ));
            }
            let s = nondimensionalize(&p)?;
            log::info!(
                "physical parameters give delta = {:e}, tau = {:e}, x_scale = {:e}, t_scale = {:e}, rho_scale = {:e}",
                s.delta,
                s.tau,
                s.x_scale,
                s.t_scale,
                s.rho_scale
            );
            (s.delta, Some(s.tau), Some(s))
        } else {
            if physical.is_some() {
                return Err(Error::config("physical", "only used in dimensional mode"));
            }
            (raw.delta.unwrap_or(1.0), raw.tau, None)
        };
        let chemo = match mode {
            ModeTag::Elliptic => {
                if raw.tau.is_some() {
                    return Err(Error::config("tau", "only used in parabolic mode"));
                }
                ChemoParams {
                    delta,
                    mode: ChemoMode::Elliptic,
                }
            }
            ModeTag::Parabolic => ChemoParams {
                delta,
                mode: ChemoMode::Parabolic {
                    tau: tau.ok_or_else(|| Error::config("tau", "required in parabolic mode"))?,
                },
            },
        };

        let operator = match raw.operator.unwrap_or(OperatorTag::Riesz) {
            OperatorTag::Riesz => {
                let alpha = match (raw.alpha, physical) {
                    (Some(a), Some(p)) if system == SystemMode::Dimensional && a != p.alpha => {
                        return Err(Error::config("alpha", "disagrees with physical.alpha"));
                    }
                    (Some(a), _) => a,
                    (None, Some(p)) if system == SystemMode::Dimensional => p.alpha,
                    (None, _) => 1.5,
                };
                DispersalOperator::Riesz { alpha }
            }
            OperatorTag::Laplacian => {
                no_alpha(raw.alpha, "laplacian")?;
                DispersalOperator::Laplacian
            }
            OperatorTag::Mesenchymal => {
                no_alpha(raw.alpha, "mesenchymal")?;
                DispersalOperator::MesenchymalNonlocal
            }
        };

        let initial_condition = ic_from_raw(required(raw.initial_condition, "initial_condition")?)?;

        let d = StepControl::default();
        let step_control = match raw.step_control {
            None => d,
            Some(s) => StepControl {
                cfl: s.cfl.unwrap_or(d.cfl),
                dt_min: s.dt_min.unwrap_or(d.dt_min),
                dt_max: s.dt_max.unwrap_or(d.dt_max),
                dt_initial: s.dt_initial,
                adaptive: s.adaptive.unwrap_or(d.adaptive),
                blowup_factor: s.blowup_factor.unwrap_or(d.blowup_factor),
                undershoot_tol: s.undershoot_tol.unwrap_or(d.undershoot_tol),
            },
        };

        let t_end = required(raw.t_end, "t_end")?;
        let output = match raw.output {
            None => OutputSpec {
                interval: t_end.max(f64::MIN_POSITIVE) / 10.0,
                directory: None,
                snapshot_fields: vec![SnapshotField::Rho, SnapshotField::C],
            },
            Some(o) => {
                let mut fields = o
                    .snapshot_fields
                    .unwrap_or_else(|| vec![SnapshotField::Rho, SnapshotField::C]);
                fields.sort_by_key(|f| *f as u8);
                fields.dedup();
                OutputSpec {
                    interval: o.interval.unwrap_or(t_end.max(f64::MIN_POSITIVE) / 10.0),
                    directory: o.directory,
                    snapshot_fields: fields,
                }
            }
        };

        let dt = ToleranceSet::default();
        let tolerances = match raw.tolerances {
            None => dt,
            Some(t) => ToleranceSet {
                mass: t.mass.unwrap_or(dt.mass),
                inequality: t.inequality.unwrap_or(dt.inequality),
                positivity: t.positivity.unwrap_or(dt.positivity),
            },
        };

        let cfg = SimConfig {
            preset: raw.preset.unwrap_or_else(|| "custom".into()),
            grid,
            operator,
            system,
            chemo,
            physical,
            scales,
            initial_condition,
            step_control,
            t_end,
            output,
            seed: raw.seed.unwrap_or(0),
            tolerances,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Whole-config validation.
    pub fn validate(&self) -> Result<()> {
        let grid = Grid::new(self.grid.n, self.grid.length)
            .map_err(|e| Error::config("grid", e.to_string()))?;
        self.operator.validate()?;
        self.chemo.validate()?;
        if let Some(p) = &self.physical {
            p.validate()?;
        }
        self.initial_condition
            .build(&std::sync::Arc::new(grid), self.seed)?;
        self.step_control.validate()?;
        self.tolerances.validate()?;
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::config(
                "t_end",
                format!("must be nonnegative, got {}", self.t_end),
            ));
        }
        let interval = self.output.interval;
        if !(interval.is_finite() && interval > 0.0) {
            return Err(Error::config(
                "output.interval",
                format!("must be positive, got {interval}"),
            ));
        }
        if self.t_end / interval > MAX_OUTPUTS {
            return Err(Error::config("output.interval", "too many output times"));
        }
        Ok(())
    }

    /// Canonical echo with every default explicit. Loading it back gives the
    /// same config.
    pub fn to_value(&self) -> Value {
        let (mode, delta, tau) = match self.chemo.mode {
            ChemoMode::Elliptic => ("elliptic", Some(self.chemo.delta), None),
            ChemoMode::Parabolic { tau } => ("parabolic", Some(self.chemo.delta), Some(tau)),
        };
        let dimensional = self.system == SystemMode::Dimensional;
        let (delta, tau) = if dimensional {
            (None, None)
        } else {
            (delta, tau)
        };
        let alpha = match self.operator {
            DispersalOperator::Riesz { alpha } => Some(alpha),
            _ => None,
        };
        let s = &self.step_control;
        json!({
            "preset": self.preset,
            "grid": { "n": self.grid.n, "length": self.grid.length },
            "operator": self.operator.tag(),
            "alpha": alpha,
            "system": self.system.tag(),
            "chemo_mode": mode,
            "delta": delta,
            "tau": tau,
            "physical": self.physical.map(|p| json!({
                "d_rho": p.d_rho, "d_c": p.d_c, "kappa": p.kappa,
                "gamma": p.gamma, "beta": p.beta, "alpha": p.alpha,
            })),
            "initial_condition": ic_to_value(&self.initial_condition),
            "step_control": {
                "cfl": s.cfl,
                "dt_min": s.dt_min,
                "dt_max": s.dt_max,
                "dt_initial": s.dt_initial,
                "adaptive": s.adaptive,
                "blowup_factor": s.blowup_factor,
                "undershoot_tol": s.undershoot_tol,
            },
            "t_end": self.t_end,
            "output": {
                "interval": self.output.interval,
                "directory": self.output.directory,
                "snapshot_fields": self.output.snapshot_fields.iter().map(|f| f.tag()).collect::<Vec<_>>(),
            },
            "seed": self.seed,
            "tolerances": {
                "mass": self.tolerances.mass,
                "inequality": self.tolerances.inequality,
                "positivity": self.tolerances.positivity,
            },
        })
    }

    /// Output times `interval, 2·interval, …`, ending exactly at `t_end`.
    pub fn output_times(&self) -> Vec<f64> {
        let mut out = vec![0.0];
        let mut k = 1u64;
        loop {
            let t = (k as f64 * self.output.interval).min(self.t_end);
            if t <= *out.last().expect("non-empty") {
                break;
            }
            out.push(t);
            if t >= self.t_end {
                break;
            }
            k += 1;
        }
        out
    }
}

fn no_alpha(alpha: Option<f64>, op: &str) -> Result<()> {
    match alpha {
        Some(_) => Err(Error::config(
            "alpha",
            format!("not used by the {op} operator"),
        )),
        None => Ok(()),
    }
}

fn ic_from_raw(r: RawIc) -> Result<InitialCondition> {
    let kind_tag = required(r.kind, "initial_condition.kind")?;
    let unused = |name: &str, present: bool| -> Result<()> {
        if present {
            Err(Error::config(
                format!("initial_condition.{name}"),
                "not used by this initial condition kind",
            ))
        } else {
            Ok(())
        }
    };
    let kind = match kind_tag {
        IcTag::Gaussian => {
            unused("bumps", r.bumps.is_some())?;
            unused("seed", r.seed.is_some())?;
            unused("modes", r.modes.is_some())?;
            unused("value", r.value.is_some())?;
            IcKind::Gaussian(Bump {
                mass: required(r.mass, "initial_condition.mass")?,
                width: required(r.width, "initial_condition.width")?,
                center: r.center,
            })
        }
        IcTag::MultiBump => {
            for (n, p) in [
                ("mass", r.mass.is_some()),
                ("width", r.width.is_some()),
                ("center", r.center.is_some()),
                ("seed", r.seed.is_some()),
                ("modes", r.modes.is_some()),
                ("value", r.value.is_some()),
            ] {
                unused(n, p)?;
            }
            IcKind::MultiBump(
                required(r.bumps, "initial_condition.bumps")?
                    .into_iter()
                    .map(|b| Bump {
                        mass: b.mass,
                        width: b.width,
                        center: b.center,
                    })
                    .collect(),
            )
        }
        IcTag::SeededRandom => {
            unused("bumps", r.bumps.is_some())?;
            unused("center", r.center.is_some())?;
            unused("value", r.value.is_some())?;
            IcKind::SeededRandom {
                seed: r.seed,
                mass: required(r.mass, "initial_condition.mass")?,
                modes: r.modes.unwrap_or(8),
                width: required(r.width, "initial_condition.width")?,
            }
        }
        IcTag::Uniform => {
            for (n, p) in [
                ("mass", r.mass.is_some()),
                ("width", r.width.is_some()),
                ("center", r.center.is_some()),
                ("bumps", r.bumps.is_some()),
                ("seed", r.seed.is_some()),
                ("modes", r.modes.is_some()),
            ] {
                unused(n, p)?;
            }
            IcKind::Uniform {
                value: required(r.value, "initial_condition.value")?,
            }
        }
    };
    Ok(InitialCondition {
        kind,
        floor: r.floor.unwrap_or(0.0),
    })
}

fn ic_to_value(ic: &InitialCondition) -> Value {
    let bump = |b: &Bump| json!({ "mass": b.mass, "width": b.width, "center": b.center });
    let mut v = match &ic.kind {
        IcKind::Gaussian(b) => {
            let mut v = bump(b);
            v["kind"] = json!("gaussian");
            v
        }
        IcKind::MultiBump(bs) => json!({
            "kind": "multi_bump",
            "bumps": bs.iter().map(bump).collect::<Vec<_>>(),
        }),
        IcKind::SeededRandom {
            seed,
            mass,
            modes,
            width,
        } => json!({
            "kind": "seeded_random", "seed": seed, "mass": mass, "modes": modes, "width": width,
        }),
        IcKind::Uniform { value } => json!({ "kind": "uniform", "value": value }),
    };
    v["floor"] = json!(ic.floor);
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> Value {
        json!({
            "grid": { "n": 256, "length": 40.0 },
            "initial_condition": { "kind": "gaussian", "mass": 2.0, "width": 1.0 },
            "t_end": 1.0,
        })
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = SimConfig::from_value(&layer(Some(minimal()), None, &[]).unwrap()).unwrap();
        assert_eq!(cfg.preset, "custom");
        assert_eq!(cfg.operator, DispersalOperator::Riesz { alpha: 1.5 });
        assert_eq!(cfg.chemo, ChemoParams::elliptic(1.0).unwrap());
        assert_eq!(cfg.step_control, StepControl::default());
        assert_eq!(cfg.output.interval, 0.1);
        let echo = cfg.to_value();
        assert_eq!(echo["step_control"]["cfl"], json!(0.4));
        assert_eq!(echo["tolerances"]["mass"], json!(1e-10));
        assert_eq!(echo["chemo_mode"], json!("elliptic"));
        assert_eq!(SimConfig::from_value(&echo).unwrap(), cfg);
    }

    #[test]
    fn rejects_alpha_out_of_range() {
        let mut v = minimal();
        v["alpha"] = json!(0.5);
        let err = SimConfig::from_value(&v).unwrap_err();
        assert!(err.is_config_error());
        assert!(err.to_string().contains("alpha"), "{err}");
    }

    #[test]
    fn unknown_key_is_named() {
        let mut v = minimal();
        v["alpha_"] = json!(1.5);
        let err = SimConfig::from_value(&v).unwrap_err().to_string();
        assert!(err.contains("alpha_"), "{err}");
    }

    #[test]
    fn nested_error_has_path() {
        let mut v = minimal();
        v["step_control"] = json!({ "cfl": "fast" });
        let err = SimConfig::from_value(&v).unwrap_err().to_string();
        assert!(err.contains("step_control.cfl"), "{err}");

        let mut v = minimal();
        v["initial_condition"]["width"] = json!(1e-3);
        let err = SimConfig::from_value(&v).unwrap_err();
        assert!(err.is_config_error());
    }

    #[test]
    fn overrides_and_merge() {
        let v = layer(
            Some(minimal()),
            None,
            &[
                "initial_condition.mass=7".into(),
                "operator=laplacian".into(),
            ],
        )
        .unwrap();
        let cfg = SimConfig::from_value(&v).unwrap();
        assert_eq!(cfg.operator, DispersalOperator::Laplacian);
        assert_eq!(cfg.initial_condition.total_mass(40.0), 7.0);
        assert!(apply_override(&mut json!({}), "novalue").is_err());
        assert!(apply_override(&mut json!({"a": 1}), "a.b=2").is_err());
    }

    #[test]
    fn system_modes() {
        let mut v = minimal();
        v["system"] = json!("full_nondimensional");
        assert!(SimConfig::from_value(&v).is_err());
        v["tau"] = json!(0.05);
        let cfg = SimConfig::from_value(&v).unwrap();
        assert_eq!(cfg.chemo.tau(), Some(0.05));

        let mut v = minimal();
        v["system"] = json!("dimensional");
        v["physical"] = json!({ "d_rho": 2.0, "d_c": 4.0, "kappa": 1.0, "gamma": 1.0, "beta": 1.0, "alpha": 2.0 });
        let cfg = SimConfig::from_value(&v).unwrap();
        assert!((cfg.chemo.delta - 0.5).abs() < 1e-15);
        assert_eq!(cfg.operator, DispersalOperator::Riesz { alpha: 2.0 });
        assert_eq!(SimConfig::from_value(&cfg.to_value()).unwrap(), cfg);
    }

    #[test]
    fn output_times_end_at_t_end() {
        let mut v = minimal();
        v["t_end"] = json!(1.05);
        v["output"] = json!({ "interval": 0.5 });
        let cfg = SimConfig::from_value(&v).unwrap();
        assert_eq!(cfg.output_times(), vec![0.0, 0.5, 1.0, 1.05]);
    }
}
