//! Named scenario presets. Each is a partial config that files and
//! overrides are layered on top of.

use serde_json::{json, Value};

use crate::error::{Error, Result};

pub const PRESET_NAMES: [&str; 4] = ["fractional", "classical", "mesenchymal", "custom"];

/// Base config value of a preset. `custom` is empty.
pub fn preset_value(name: &str) -> Result<Value> {
    let v = match name {
        "fractional" => json!({
            "grid": { "n": 4096, "length": 200.0 },
            "operator": "riesz",
            "alpha": 1.5,
            "system": "parabolic_elliptic",
            "delta": 1.0,
            "initial_condition": { "kind": "gaussian", "mass": 100.0, "width": 1.0 },
            "t_end": 50.0,
            "output": { "interval": 1.0 },
        }),
        "classical" => json!({
            "grid": { "n": 4096, "length": 200.0 },
            "operator": "laplacian",
            "system": "parabolic_elliptic",
            "delta": 1.0,
            "initial_condition": { "kind": "gaussian", "mass": 100.0, "width": 1.0 },
            "t_end": 50.0,
            "output": { "interval": 1.0 },
        }),
        "mesenchymal" => json!({
            "grid": { "n": 4096, "length": 20.0 },
            "operator": "mesenchymal",
            "system": "parabolic_elliptic",
            "delta": 1.0,
            "initial_condition": { "kind": "gaussian", "mass": 10.0, "width": 1.0 },
            "step_control": { "blowup_factor": 5.0 },
            "t_end": 20.0,
            "output": { "interval": 1.0 },
        }),
        "custom" => json!({}),
        other => {
            return Err(Error::config(
                "preset",
                format!(
                    "unknown preset `{other}`, expected one of {}",
                    PRESET_NAMES.join(", ")
                ),
            ))
        }
    };
    Ok(v)
}
