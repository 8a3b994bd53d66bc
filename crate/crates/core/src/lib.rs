//! Pseudo-spectral simulator for the one-dimensional Keller-Segel
//! chemotaxis system with fractional (Riesz), classical or bounded
//! nonlocal dispersal, on a periodic box.
//!
//! ```text
//! ∂t ρ = Dρ − (ρ c_x)_x
//! c_xx = δc − ρ            (elliptic mode)
//! τ ∂t c = c_xx + ρ − δc   (parabolic mode)
//! ```

pub mod chemo;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod initial;
pub mod operators;
pub mod runner;
pub mod scaling;
pub mod stepper;

pub use chemo::{solve_elliptic, step_parabolic_c, ChemoMode, ChemoParams};
pub use diagnostics::{
    check_invariants, cx_bound_constant, measure, DiagnosticsRecord, InvariantFlags, ToleranceSet,
};
pub use error::{Error, Result};
pub use grid::{Grid, RealField, SpectralField};
pub use initial::{IcKind, InitialCondition};
pub use operators::DispersalOperator;
pub use scaling::{nondimensionalize, NondimParams, PhysicalParams};
pub use stepper::{
    chemotactic_flux_divergence, detect_blowup, run, Integrator, SimState, Status, StepControl,
};
