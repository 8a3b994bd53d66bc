//! Time integration of `∂t ρ = Dρ − (ρ c_x)_x`, where `D` is a dispersal
//! operator and `c` comes from [`crate::chemo`].
//!
//! The scheme is integrating-factor RK4: the diagonal linear part is
//! propagated exactly by `E(h) = e^{σ(k)h}` and classical RK4 is applied to
//! the transformed nonlinearity,
//!
//! ```text
//! a = h N(û)
//! b = h N(E(h/2) (û + a/2))
//! c = h N(E(h/2) û + b/2)
//! d = h N(E(h) û + E(h/2) c)
//! û ← E(h) û + (E(h) a + 2 E(h/2)(b + c) + d) / 6
//! ```
//!
//! The product `ρ·c_x` is formed with both factors and the result truncated
//! by the 2/3 rule, and its derivative is exact, so the mean mode of
//! `N(û)` is identically zero and the mass is conserved to rounding.

use std::sync::Arc;

use rustfft::num_complex::Complex64;

use crate::chemo::{
    elliptic_multiplier, solve_elliptic, ChemoMode, ChemoParams, ParabolicRelaxation,
};
use crate::diagnostics::{annotate, measure, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::grid::{Grid, RealField};
use crate::operators::{DispersalOperator, SymbolTable};
use crate::runner::config::SimConfig;

/// Floor on `max|c_x|` in the CFL bound.
pub const CX_FLOOR: f64 = 1e-12;

/// Largest factor by which the step may grow after an accepted step.
pub const GROWTH_LIMIT: f64 = 1.2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Status {
    Running,
    Completed,
    /// Chemotactic collapse. `t_star` brackets the collapse time and
    /// `x_site` is the location of the density peak.
    BlowUp {
        t_star: (f64, f64),
        x_site: f64,
    },
    StepUnderflow {
        t: f64,
    },
}

impl Status {
    pub fn is_running(&self) -> bool {
        matches!(self, Status::Running)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Status::Running => "running",
            Status::Completed => "completed",
            Status::BlowUp { .. } => "blow_up",
            Status::StepUnderflow { .. } => "step_underflow",
        }
    }

    /// Process exit code for a terminated run.
    pub fn exit_code(&self) -> i32 {
        match self {
            Status::Running | Status::Completed => 0,
            Status::BlowUp { .. } => 10,
            Status::StepUnderflow { .. } => 11,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub cfl: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Starting step; the CFL bound at `t = 0` when absent.
    pub dt_initial: Option<f64>,
    /// When false the step never grows and ignores the CFL bound; rejected
    /// steps are still halved.
    pub adaptive: bool,
    pub blowup_factor: f64,
    pub undershoot_tol: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            cfl: 0.4,
            dt_min: 1e-10,
            dt_max: 1e-2,
            dt_initial: None,
            adaptive: true,
            blowup_factor: 1e4,
            undershoot_tol: 1e-8,
        }
    }
}

impl StepControl {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(Error::param(
                "step_control.cfl",
                format!("must lie in (0, 1), got {}", self.cfl),
            ));
        }
        if !(self.dt_min > 0.0 && self.dt_max.is_finite() && self.dt_min < self.dt_max) {
            return Err(Error::param(
                "step_control.dt_min",
                format!(
                    "need 0 < dt_min < dt_max, got {} and {}",
                    self.dt_min, self.dt_max
                ),
            ));
        }
        if let Some(dt) = self.dt_initial {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(Error::param(
                    "step_control.dt_initial",
                    format!("must be positive, got {dt}"),
                ));
            }
        }
        if !(self.blowup_factor.is_finite() && self.blowup_factor > 1.0) {
            return Err(Error::param(
                "step_control.blowup_factor",
                format!("must exceed 1, got {}", self.blowup_factor),
            ));
        }
        if !(self.undershoot_tol.is_finite() && self.undershoot_tol >= 0.0) {
            return Err(Error::param(
                "step_control.undershoot_tol",
                format!("must be nonnegative, got {}", self.undershoot_tol),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SimState {
    pub rho: RealField,
    pub c: RealField,
    pub t: f64,
    /// Controller step size. The step actually taken may be shorter when it
    /// is clipped to an output time.
    pub dt: f64,
    pub step_count: u64,
    pub rejections: u64,
    pub status: Status,
    /// `‖ρ(0)‖∞`, the reference amplitude of the collapse threshold.
    pub initial_peak: f64,
    /// Time of the previous accepted state.
    pub t_prev: f64,
}

impl SimState {
    pub fn grid(&self) -> &Arc<Grid> {
        self.rho.grid()
    }
}

/// Collapse and underflow detector.
///
/// Returns `StepUnderflow` once the controller step has fallen below
/// `dt_min`, `BlowUp` when `‖ρ‖∞` exceeds `blowup_factor · ‖ρ(0)‖∞`, and
/// `Running` otherwise. Terminal states are returned unchanged.
pub fn detect_blowup(state: &SimState, ctrl: &StepControl) -> Status {
    if !state.status.is_running() {
        return state.status;
    }
    if state.dt < ctrl.dt_min {
        return Status::StepUnderflow { t: state.t };
    }
    if state.rho.max_abs() > ctrl.blowup_factor * state.initial_peak {
        let x_site = state.grid().x(state.rho.argmax());
        return Status::BlowUp {
            t_star: (state.t_prev, state.t),
            x_site,
        };
    }
    Status::Running
}

/// Immutable per-run tables.
#[derive(Debug, Clone)]
struct Tables {
    grid: Arc<Grid>,
    symbols: SymbolTable,
    /// `1/(k²+δ)`.
    green: Vec<f64>,
    /// Wavenumbers with the Nyquist entry zeroed, for odd derivatives.
    k_odd: Vec<f64>,
    keep: Vec<bool>,
    chemotaxis: bool,
}

impl Tables {
    /// Writes `N(û) = −(ρ c_x)_x` into `out` and returns `max|c_x|` of the
    /// truncated gradient. `cx_frozen` supplies `ĉ_x`; otherwise it is
    /// computed from `û` through the elliptic balance.
    fn nonlinear(
        &self,
        u: &[Complex64],
        cx_frozen: Option<&[Complex64]>,
        out: &mut [Complex64],
        z: &mut [Complex64],
    ) -> f64 {
        let zero = Complex64::new(0.0, 0.0);
        if !self.chemotaxis {
            out.fill(zero);
            return 0.0;
        }
        // ρ and c_x are both real, so one inverse transform of ρ̂ + i ĉ_x
        // yields ρ in the real part and c_x in the imaginary part.
        for j in 0..u.len() {
            z[j] = if self.keep[j] {
                let b = match cx_frozen {
                    Some(cx) => cx[j],
                    None => {
                        let ch = u[j] * self.green[j];
                        Complex64::new(-self.k_odd[j] * ch.im, self.k_odd[j] * ch.re)
                    }
                };
                Complex64::new(u[j].re - b.im, u[j].im + b.re)
            } else {
                zero
            };
        }
        self.grid.backward_in_place(z);
        let mut cx_max = 0.0f64;
        for w in z.iter_mut() {
            cx_max = cx_max.max(w.im.abs());
            *w = Complex64::new(w.re * w.im, 0.0);
        }
        self.grid.forward_in_place(z);
        for j in 0..u.len() {
            out[j] = if self.keep[j] {
                let k = self.k_odd[j];
                // −i k p̂
                Complex64::new(k * z[j].im, -k * z[j].re)
            } else {
                zero
            };
        }
        cx_max
    }

    fn cx_hat_from(&self, c_hat: &[Complex64], out: &mut [Complex64]) {
        for j in 0..c_hat.len() {
            let k = self.k_odd[j];
            out[j] = Complex64::new(-k * c_hat[j].im, k * c_hat[j].re);
        }
    }
}

/// Per-integrator scratch; never shared between integrators.
#[derive(Debug, Clone)]
struct Work {
    u: Vec<Complex64>,
    next: Vec<Complex64>,
    stage: Vec<Complex64>,
    k1: Vec<Complex64>,
    k2: Vec<Complex64>,
    k3: Vec<Complex64>,
    k4: Vec<Complex64>,
    z: Vec<Complex64>,
    cx: Vec<Complex64>,
    c_hat: Vec<Complex64>,
}

impl Work {
    fn new(n: usize) -> Self {
        let v = || vec![Complex64::new(0.0, 0.0); n];
        Work {
            u: v(),
            next: v(),
            stage: v(),
            k1: v(),
            k2: v(),
            k3: v(),
            k4: v(),
            z: v(),
            cx: v(),
            c_hat: v(),
        }
    }
}

#[derive(Debug, Clone)]
struct Propagators {
    h: f64,
    full: Vec<f64>,
    half: Vec<f64>,
}

/// Integrating-factor RK4 integrator for one simulation.
#[derive(Debug, Clone)]
pub struct Integrator {
    tables: Tables,
    chemo: ChemoParams,
    ctrl: StepControl,
    work: Work,
    propagators: Option<Propagators>,
    relaxation: Option<ParabolicRelaxation>,
}

impl Integrator {
    pub fn new(
        grid: Arc<Grid>,
        op: DispersalOperator,
        chemo: ChemoParams,
        ctrl: StepControl,
    ) -> Result<Self> {
        op.validate()?;
        chemo.validate()?;
        ctrl.validate()?;
        let n = grid.n();
        let mut k_odd = grid.wavenumbers().to_vec();
        k_odd[grid.nyquist()] = 0.0;
        let keep = (0..n).map(|j| grid.retained_by_two_thirds(j)).collect();
        let tables = Tables {
            symbols: SymbolTable::new(op, Arc::clone(&grid)),
            green: elliptic_multiplier(&grid, chemo.delta),
            k_odd,
            keep,
            chemotaxis: true,
            grid,
        };
        Ok(Integrator {
            tables,
            chemo,
            ctrl,
            work: Work::new(n),
            propagators: None,
            relaxation: None,
        })
    }

    /// Disables the chemotactic flux, leaving pure dispersal.
    pub fn without_chemotaxis(mut self) -> Self {
        self.tables.chemotaxis = false;
        self
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.tables.grid
    }

    pub fn operator(&self) -> DispersalOperator {
        self.tables.symbols.operator()
    }

    pub fn chemo(&self) -> &ChemoParams {
        &self.chemo
    }

    pub fn control(&self) -> &StepControl {
        &self.ctrl
    }

    /// Initial state. `c0` defaults to the elliptic solve of `rho0`, in
    /// parabolic mode as well.
    pub fn initial_state(&mut self, rho0: RealField, c0: Option<RealField>) -> Result<SimState> {
        self.tables.grid.ensure_same(rho0.grid())?;
        let c = match c0 {
            Some(c) => {
                self.tables.grid.ensure_same(c.grid())?;
                c
            }
            None => solve_elliptic(&rho0, self.chemo.delta)?,
        };
        let mut state = SimState {
            initial_peak: rho0.max_abs(),
            rho: rho0,
            c,
            t: 0.0,
            t_prev: 0.0,
            dt: 0.0,
            step_count: 0,
            rejections: 0,
            status: Status::Running,
        };
        state.dt = match self.ctrl.dt_initial {
            Some(dt) => dt,
            None => {
                let cx = self.max_cx(&state);
                self.cfl_bound(cx).min(self.ctrl.dt_max)
            }
        };
        Ok(state)
    }

    fn cfl_bound(&self, cx_max: f64) -> f64 {
        self.ctrl.cfl * self.tables.grid.dx() / cx_max.max(CX_FLOOR)
    }

    fn max_cx(&mut self, state: &SimState) -> f64 {
        let Work { c_hat, cx, .. } = &mut self.work;
        for (z, v) in c_hat.iter_mut().zip(state.c.values()) {
            *z = Complex64::new(*v, 0.0);
        }
        self.tables.grid.forward_in_place(c_hat);
        self.tables.cx_hat_from(c_hat, cx);
        self.tables.grid.backward_in_place(cx);
        cx.iter().fold(0.0, |m, z| m.max(z.re.abs()))
    }

    fn propagators(&mut self, h: f64) -> &Propagators {
        if self.propagators.as_ref().map(|p| p.h) != Some(h) {
            self.propagators = Some(Propagators {
                h,
                full: self.tables.symbols.propagator(h),
                half: self.tables.symbols.propagator(0.5 * h),
            });
        }
        self.propagators.as_ref().expect("just populated")
    }

    /// One RK4 trial of length `h` from `work.u`, written to `work.next`.
    fn trial(&mut self, h: f64, frozen: bool) {
        let (e, e2) = {
            let p = self.propagators(h);
            (p.full.clone(), p.half.clone())
        };
        let tables = &self.tables;
        let Work {
            u,
            next,
            stage,
            k1,
            k2,
            k3,
            k4,
            z,
            cx,
            ..
        } = &mut self.work;
        let cx_frozen = if frozen { Some(&cx[..]) } else { None };
        let n = u.len();

        tables.nonlinear(u, cx_frozen, k1, z);
        for j in 0..n {
            k1[j] *= h;
            stage[j] = (u[j] + 0.5 * k1[j]) * e2[j];
        }
        tables.nonlinear(stage, cx_frozen, k2, z);
        for j in 0..n {
            k2[j] *= h;
            stage[j] = u[j] * e2[j] + 0.5 * k2[j];
        }
        tables.nonlinear(stage, cx_frozen, k3, z);
        for j in 0..n {
            k3[j] *= h;
            stage[j] = u[j] * e[j] + k3[j] * e2[j];
        }
        tables.nonlinear(stage, cx_frozen, k4, z);
        for j in 0..n {
            k4[j] *= h;
            next[j] = u[j] * e[j] + (k1[j] * e[j] + 2.0 * e2[j] * (k2[j] + k3[j]) + k4[j]) / 6.0;
        }
    }

    /// Advances `state` by one accepted step, never past `t_stop`.
    ///
    /// Steps whose result is non-finite or undershoots below both
    /// `−undershoot_tol·‖ρ‖∞` and the minimum of the current state are
    /// rejected and retried with half the step.
    /// When the step falls below `dt_min` the run ends: as `BlowUp` if any
    /// rejected trial on the way down was non-finite or above the collapse
    /// threshold, otherwise as `StepUnderflow`.
    pub fn step(&mut self, state: &mut SimState, t_stop: f64) -> Result<()> {
        if !state.status.is_running() {
            return Ok(());
        }
        self.tables.grid.ensure_same(state.rho.grid())?;
        let n = self.tables.grid.n();
        let frozen = matches!(self.chemo.mode, ChemoMode::Parabolic { .. });

        {
            let Work { u, c_hat, cx, .. } = &mut self.work;
            for (z, v) in u.iter_mut().zip(state.rho.values()) {
                *z = Complex64::new(*v, 0.0);
            }
            self.tables.grid.forward_in_place(u);
            if frozen {
                for (z, v) in c_hat.iter_mut().zip(state.c.values()) {
                    *z = Complex64::new(*v, 0.0);
                }
                self.tables.grid.forward_in_place(c_hat);
                self.tables.cx_hat_from(c_hat, cx);
                for (z, &keep) in cx.iter_mut().zip(&self.tables.keep) {
                    if !keep {
                        *z = Complex64::new(0.0, 0.0);
                    }
                }
            }
        }

        let prior_min = state.rho.min();
        let threshold = self.ctrl.blowup_factor * state.initial_peak;
        let mut singular_trial: Option<f64> = None;
        let mut candidate = vec![0.0; n];

        loop {
            let remaining = t_stop - state.t;
            if remaining <= 0.0 {
                return Ok(());
            }
            let lands = state.dt >= remaining * (1.0 - 1e-12);
            let h = if lands { remaining } else { state.dt };

            self.trial(h, frozen);

            let mut z = self.work.next.clone();
            self.tables.grid.backward_in_place(&mut z);
            let mut finite = true;
            let (mut lo, mut peak) = (f64::INFINITY, 0.0f64);
            for (dst, w) in candidate.iter_mut().zip(&z) {
                finite &= w.re.is_finite();
                *dst = w.re;
                lo = lo.min(w.re);
                peak = peak.max(w.re.abs());
            }

            // Negative values already present in the data only count when
            // they deepen.
            let undershoot = lo < (-self.ctrl.undershoot_tol * peak).min(prior_min);
            if finite && !undershoot {
                self.accept(state, &candidate, h, lands, t_stop, frozen)?;
                return Ok(());
            }

            if !finite || peak > threshold {
                let t_reject = state.t + h;
                singular_trial = Some(singular_trial.map_or(t_reject, |t: f64| t.min(t_reject)));
            }
            state.rejections += 1;
            state.dt *= 0.5;
            if let Status::StepUnderflow { t } = detect_blowup(state, &self.ctrl) {
                state.status = match singular_trial {
                    Some(t_reject) => Status::BlowUp {
                        t_star: (t, t_reject),
                        x_site: state.grid().x(state.rho.argmax()),
                    },
                    None => Status::StepUnderflow { t },
                };
                return Ok(());
            }
        }
    }

    fn accept(
        &mut self,
        state: &mut SimState,
        candidate: &[f64],
        h: f64,
        lands: bool,
        t_stop: f64,
        frozen: bool,
    ) -> Result<()> {
        let grid = Arc::clone(&self.tables.grid);
        let n = grid.n();
        state.rho.values_mut().copy_from_slice(candidate);

        // New c and c_x in one inverse transform.
        let Work {
            next, c_hat, cx, z, ..
        } = &mut self.work;
        if frozen {
            let tau = self.chemo.tau().expect("parabolic mode");
            if self.relaxation.as_ref().map(|r| r.dt) != Some(h) {
                self.relaxation = Some(ParabolicRelaxation::new(&grid, self.chemo.delta, tau, h));
            }
            let relax = self.relaxation.as_ref().expect("just populated");
            for j in 0..n {
                c_hat[j] = c_hat[j] * relax.decay[j] + next[j] * relax.source[j];
            }
        } else {
            for j in 0..n {
                c_hat[j] = next[j] * self.tables.green[j];
            }
        }
        self.tables.cx_hat_from(c_hat, cx);
        for j in 0..n {
            z[j] = Complex64::new(c_hat[j].re - cx[j].im, c_hat[j].im + cx[j].re);
        }
        grid.backward_in_place(z);
        let mut cx_max = 0.0f64;
        for (dst, w) in state.c.values_mut().iter_mut().zip(z.iter()) {
            *dst = w.re;
            cx_max = cx_max.max(w.im.abs());
        }

        state.t_prev = state.t;
        state.t = if lands { t_stop } else { state.t + h };
        state.step_count += 1;

        if self.ctrl.adaptive {
            let grown = (GROWTH_LIMIT * state.dt).min(self.ctrl.dt_max);
            state.dt = grown.min(self.cfl_bound(cx_max));
        }
        state.status = detect_blowup(state, &self.ctrl);
        Ok(())
    }
}

/// Divergence-form chemotactic term `−(ρ c_x)_x` with 2/3-rule dealiasing
/// of both factors and of the product.
pub fn chemotactic_flux_divergence(rho: &RealField, c: &RealField) -> Result<RealField> {
    rho.grid().ensure_same(c.grid())?;
    let grid = Arc::clone(rho.grid());
    let n = grid.n();
    let mut k_odd = grid.wavenumbers().to_vec();
    k_odd[grid.nyquist()] = 0.0;
    let tables = Tables {
        symbols: SymbolTable::new(DispersalOperator::Laplacian, Arc::clone(&grid)),
        green: vec![0.0; n],
        k_odd,
        keep: (0..n).map(|j| grid.retained_by_two_thirds(j)).collect(),
        chemotaxis: true,
        grid: Arc::clone(&grid),
    };
    let u = rho.forward();
    let c_hat = c.forward();
    let mut cx = vec![Complex64::new(0.0, 0.0); n];
    tables.cx_hat_from(c_hat.coeffs(), &mut cx);
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    let mut z = vec![Complex64::new(0.0, 0.0); n];
    tables.nonlinear(u.coeffs(), Some(&cx), &mut out, &mut z);
    grid.backward_in_place(&mut out);
    Ok(RealField::from_parts(
        grid,
        out.into_iter().map(|w| w.re).collect(),
    ))
}

/// Summary of a finished run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub final_state: SimState,
    pub records: Vec<DiagnosticsRecord>,
    /// Running maximum of `‖ρ‖∞` over every accepted step.
    pub sup_linf_rho: f64,
    /// Norms of the initial data: `‖ρ₀‖₁`, `‖ρ₀‖₂`, `‖(ρ₀)_x‖₂`.
    pub initial_hypotheses: [f64; 3],
}

/// Runs `config` from `t = 0` to `t_end` or until the run terminates.
pub fn run(config: &SimConfig) -> Result<RunOutput> {
    run_with_observer(config, |_, _| Ok(()))
}

/// As [`run`], calling `observer` with the state and record at every
/// output time, and once more at termination if that falls between outputs.
pub fn run_with_observer<F>(config: &SimConfig, mut observer: F) -> Result<RunOutput>
where
    F: FnMut(&SimState, &DiagnosticsRecord) -> Result<()>,
{
    config.validate()?;
    let grid = Arc::new(Grid::new(config.grid.n, config.grid.length)?);
    let rho0 = config.initial_condition.build(&grid, config.seed)?;
    let mut integrator = Integrator::new(
        Arc::clone(&grid),
        config.operator,
        config.chemo,
        config.step_control,
    )?;
    let mut state = integrator.initial_state(rho0, None)?;
    let op = config.operator;
    let delta = config.chemo.delta;
    let tol = config.tolerances;

    let mut initial = measure(&state.rho, &state.c, &op, 0.0, state.dt)?;
    let reference = initial;
    annotate(&mut initial, &reference, delta, &tol)?;
    let initial_hypotheses = [initial.l1_rho, initial.l2_rho, initial.l2_rhox];
    observer(&state, &initial)?;
    let mut records = vec![initial];
    let mut sup_linf_rho = initial.linf_rho;

    let interval = config.output.interval;
    let t_end = config.t_end;
    let mut k_out: u64 = 1;
    let next_output = |k: u64| (k as f64 * interval).min(t_end);

    if t_end <= 0.0 {
        state.status = Status::Completed;
    }
    while state.status.is_running() {
        let target = next_output(k_out);
        integrator.step(&mut state, target)?;
        sup_linf_rho = sup_linf_rho.max(state.rho.max_abs());

        let at_output = state.t == target;
        if at_output && target >= t_end && state.status.is_running() {
            state.status = Status::Completed;
        }
        if at_output || !state.status.is_running() {
            let mut rec = measure(&state.rho, &state.c, &op, state.t, state.dt)?;
            annotate(&mut rec, &initial, delta, &tol)?;
            let duplicate = records.last().is_some_and(|r| r.t == rec.t);
            if !duplicate {
                observer(&state, &rec)?;
                records.push(rec);
            }
            if at_output {
                k_out += 1;
            }
        }
    }

    Ok(RunOutput {
        final_state: state,
        records,
        sup_linf_rho,
        initial_hypotheses,
    })
}
