//! Chemoattractant field `c` from the cell density `ρ`.
//!
//! Elliptic mode solves `c_xx = δc − ρ` exactly per mode,
//! `ĉ(k) = ρ̂(k) / (k² + δ)`. Parabolic mode advances
//! `τ ∂t c = c_xx + ρ − δc` with `ρ` frozen over the step, which is exact for
//! that frozen source:
//!
//! ```text
//! ĉ(t+h) = e^{−λh} ĉ(t) + (1 − e^{−λh}) ρ̂ / (k² + δ),   λ = (k² + δ)/τ
//! ```

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Grid, RealField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChemoMode {
    Elliptic,
    Parabolic { tau: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChemoParams {
    pub delta: f64,
    pub mode: ChemoMode,
}

impl ChemoParams {
    pub fn elliptic(delta: f64) -> Result<Self> {
        let p = ChemoParams {
            delta,
            mode: ChemoMode::Elliptic,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn parabolic(delta: f64, tau: f64) -> Result<Self> {
        let p = ChemoParams {
            delta,
            mode: ChemoMode::Parabolic { tau },
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_delta(self.delta)?;
        if let ChemoMode::Parabolic { tau } = self.mode {
            if !(tau.is_finite() && tau > 0.0) {
                return Err(Error::param("tau", format!("must be positive, got {tau}")));
            }
        }
        Ok(())
    }

    pub fn tau(&self) -> Option<f64> {
        match self.mode {
            ChemoMode::Parabolic { tau } => Some(tau),
            ChemoMode::Elliptic => None,
        }
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta.is_finite() && delta > 0.0 {
        Ok(())
    } else {
        Err(Error::param(
            "delta",
            format!("must be positive, got {delta}"),
        ))
    }
}

/// Per-mode Green's multiplier `1/(k² + δ)`.
pub fn elliptic_multiplier(grid: &Grid, delta: f64) -> Vec<f64> {
    grid.wavenumbers()
        .iter()
        .map(|&k| 1.0 / (k * k + delta))
        .collect()
}

/// Solves `c_xx = δc − ρ` on the periodic grid.
pub fn solve_elliptic(rho: &RealField, delta: f64) -> Result<RealField> {
    check_delta(delta)?;
    let mut spec = rho.forward();
    let g = elliptic_multiplier(rho.grid(), delta);
    for (z, m) in spec.coeffs_mut().iter_mut().zip(g) {
        *z *= m;
    }
    Ok(spec.backward())
}

/// Advances the parabolic chemoattractant equation by `dt` with `ρ` frozen.
pub fn step_parabolic_c(
    c: &RealField,
    rho: &RealField,
    params: &ChemoParams,
    dt: f64,
) -> Result<RealField> {
    params.validate()?;
    let ChemoMode::Parabolic { tau } = params.mode else {
        return Err(Error::param(
            "chemo_mode",
            "parabolic sub-step requested in elliptic mode",
        ));
    };
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::param("dt", format!("must be positive, got {dt}")));
    }
    c.grid().ensure_same(rho.grid())?;

    let relax = ParabolicRelaxation::new(c.grid(), params.delta, tau, dt);
    let mut c_hat = c.forward();
    let rho_hat = rho.forward();
    for (j, z) in c_hat.coeffs_mut().iter_mut().enumerate() {
        *z = *z * relax.decay[j] + rho_hat.coeffs()[j] * relax.source[j];
    }
    Ok(c_hat.backward())
}

/// Precomputed per-mode factors of one parabolic sub-step.
#[derive(Debug, Clone)]
pub(crate) struct ParabolicRelaxation {
    pub(crate) dt: f64,
    pub(crate) decay: Vec<f64>,
    pub(crate) source: Vec<f64>,
}

impl ParabolicRelaxation {
    pub(crate) fn new(grid: &Arc<Grid>, delta: f64, tau: f64, dt: f64) -> Self {
        let (decay, source) = grid
            .wavenumbers()
            .iter()
            .map(|&k| {
                let a = k * k + delta;
                let lh = a * dt / tau;
                // 1 − e^{−λh} without cancellation for small λh.
                ((-lh).exp(), -(-lh).exp_m1() / a)
            })
            .unzip();
        ParabolicRelaxation { dt, decay, source }
    }
}
