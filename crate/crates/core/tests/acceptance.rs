//! Acceptance criteria. Each test writes one `criterion N: PASS|FAIL` line
//! straight to stderr, so the verdicts show up even when libtest captures
//! output.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use fks_core::diagnostics::{frac_seminorm, lp_norm, spectral_l2, DiagnosticsRecord};
use fks_core::runner::config::{layer, SimConfig};
use fks_core::runner::output::{execute, load_snapshot, RunReport, DIAGNOSTICS_FILE};
use fks_core::runner::sweep::{run_sweep, SweepMode, SweepParameter, SweepSpec};
use fks_core::{
    cx_bound_constant, ChemoParams, DispersalOperator, Grid, Integrator, RealField, Status,
    StepControl,
};

fn report(n: u32, pass: bool, detail: &str) {
    let line = format!(
        "\ncriterion {n}: {} {detail}\n",
        if pass { "PASS" } else { "FAIL" }
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn verdict(n: u32, pass: bool, detail: String) {
    report(n, pass, &detail);
    assert!(pass, "criterion {n} failed: {detail}");
}

fn preset(name: &str, overrides: &[&str]) -> SimConfig {
    let sets: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    SimConfig::from_value(&layer(None, Some(name), &sets).unwrap()).unwrap()
}

fn records(dir: &Path) -> Vec<DiagnosticsRecord> {
    fs::read_to_string(dir.join(DIAGNOSTICS_FILE))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| DiagnosticsRecord::parse_csv_row(l).unwrap())
        .collect()
}

fn snapshot_files(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut v: Vec<_> = fs::read_dir(dir.join("snapshots"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    v.sort();
    v
}

/// The fractional preset run shared by criteria 2, 3, 4 and 10.
struct PresetRun {
    _dir: tempfile::TempDir,
    path: std::path::PathBuf,
    report: RunReport,
    records: Vec<DiagnosticsRecord>,
    elapsed: Duration,
}

fn fractional_run() -> &'static PresetRun {
    static RUN: OnceLock<PresetRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fractional");
        let start = Instant::now();
        let report = execute(&preset("fractional", &[]), &path).unwrap();
        let elapsed = start.elapsed();
        let records = records(&path);
        PresetRun {
            _dir: dir,
            path,
            report,
            records,
            elapsed,
        }
    })
}

fn status_text(s: &Status) -> String {
    match s {
        Status::StepUnderflow { t } => format!("step_underflow at t={t:.4e}"),
        Status::BlowUp { t_star, .. } => format!("blow_up in [{:.4e}, {:.4e}]", t_star.0, t_star.1),
        other => other.label().to_string(),
    }
}

#[test]
fn criterion_01_linear_decay_exactness() {
    let start = Instant::now();
    let g = Arc::new(Grid::new(64, 2.0 * std::f64::consts::PI).unwrap());
    let ctrl = StepControl {
        dt_initial: Some(1e-3),
        adaptive: false,
        ..StepControl::default()
    };
    let mut it = Integrator::new(
        Arc::clone(&g),
        DispersalOperator::riesz(1.5).unwrap(),
        ChemoParams::elliptic(1.0).unwrap(),
        ctrl,
    )
    .unwrap()
    .without_chemotaxis();
    let rho0 = RealField::from_fn(Arc::clone(&g), |x| (4.0 * x).cos());
    let mut s = it.initial_state(rho0, None).unwrap();
    while s.status.is_running() && s.t < 1.0 {
        it.step(&mut s, 1.0).unwrap();
    }
    let elapsed = start.elapsed();
    let decay = (-(4.0f64).powf(1.5) * s.t).exp();
    let err = s
        .rho
        .values()
        .iter()
        .enumerate()
        .map(|(m, v)| (v - decay * (4.0 * g.x(m)).cos()).abs())
        .fold(0.0, f64::max);
    let pass =
        s.t == 1.0 && s.step_count == 1000 && err <= 1e-12 && elapsed < Duration::from_secs(1);
    verdict(
        1,
        pass,
        format!(
            "max error {err:.3e} after {} steps, {:.3}s",
            s.step_count,
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_02_mass_conservation() {
    let run = fractional_run();
    let worst = run
        .records
        .iter()
        .map(|r| r.mass_drift_rel)
        .fold(0.0, f64::max);
    let completed = run.report.status == Status::Completed;
    let pass = completed && worst <= 1e-10 && run.elapsed < Duration::from_secs(120);
    verdict(
        2,
        pass,
        format!(
            "status {}, worst relative L1 drift {worst:.3e} over {} snapshots, {:.1}s",
            status_text(&run.report.status),
            run.records.len(),
            run.elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_03_chemoattractant_identities() {
    let run = fractional_run();
    let delta = 1.0;
    let mut worst_l1 = 0.0f64;
    let mut worst_l2 = f64::NEG_INFINITY;
    let mut ok = run.report.status == Status::Completed;
    for r in &run.records {
        let target = r.l1_rho / delta;
        worst_l1 = worst_l1.max((r.l1_c - target).abs() / target);
        worst_l2 = worst_l2.max(r.l2_c / (r.l2_rho / delta) - 1.0);
        ok &= (r.l1_c - target).abs() <= 1e-10 * target;
        ok &= r.l2_c <= r.l2_rho / delta * (1.0 + 1e-10);
    }
    verdict(
        3,
        ok,
        format!(
            "status {}, worst |c|1 defect {worst_l1:.3e}, max |c|2/(|rho|2/delta) - 1 = {worst_l2:.3e}",
            status_text(&run.report.status)
        ),
    );
}

/// Adaptive Simpson quadrature.
fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    rec(
        f,
        a,
        b,
        fa,
        fm,
        fb,
        (b - a) / 6.0 * (fa + 4.0 * fm + fb),
        tol,
        60,
    )
}

/// `∫ k²/(k²+δ)² dk` over the real line, mapped to `[0, 1)` by
/// `k = u/(1−u)`.
fn cx_constant_oracle(delta: f64) -> f64 {
    let f = |u: f64| {
        if u >= 1.0 {
            return 0.0;
        }
        let k = u / (1.0 - u);
        let jac = 1.0 / ((1.0 - u) * (1.0 - u));
        k * k / (k * k + delta).powi(2) * jac
    };
    2.0 * simpson(&f, 0.0, 1.0, 1e-14)
}

#[test]
fn criterion_04_cx_bound() {
    let run = fractional_run();
    let k = cx_bound_constant(1.0).unwrap();
    let mut ok = true;
    let mut worst = 0.0f64;
    for r in &run.records {
        let bound = r.l1_rho.powi(2) * k;
        worst = worst.max(r.l2_cx.powi(2) / bound);
        ok &= r.l2_cx.powi(2) <= bound * (1.0 + 1e-8);
    }
    let mut worst_oracle = 0.0f64;
    for delta in [0.25, 1.0, 4.0, 16.0] {
        let (c, o) = (cx_bound_constant(delta).unwrap(), cx_constant_oracle(delta));
        worst_oracle = worst_oracle.max((c - o).abs() / o);
    }
    ok &= worst_oracle <= 1e-8;
    verdict(
        4,
        ok,
        format!(
            "max |c_x|2^2 / bound = {worst:.3e} over {} snapshots, constant vs quadrature {worst_oracle:.3e}",
            run.records.len()
        ),
    );
}

#[test]
fn criterion_05_no_collapse() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut lines = Vec::new();
    for alpha in [1.1, 1.5, 1.9] {
        for mass in [10.0, 100.0, 1000.0] {
            let a = format!("alpha={alpha}");
            let m = format!("initial_condition.mass={mass}");
            let cfg = preset("fractional", &[&a, &m, "output.interval=50"]);
            let out = fks_core::run(&cfg).unwrap();
            let s = &out.final_state;
            let ok = s.status == Status::Completed && s.t == 50.0 && out.sup_linf_rho.is_finite();
            lines.push(format!("a={alpha} M={mass}: {}", status_text(&s.status)));
            if !ok {
                failures.push(format!("(alpha={alpha}, M={mass})"));
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = failures.is_empty() && elapsed < Duration::from_secs(1800);
    verdict(
        5,
        pass,
        format!("{}; {:.1}s", lines.join("; "), elapsed.as_secs_f64()),
    );
}

#[test]
fn criterion_06_blowup_contrast() {
    let base = preset("mesenchymal", &[]);
    let jobs = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(8);
    let spec = SweepSpec {
        base: base.clone(),
        parameter: SweepParameter::Mass,
        mode: SweepMode::Bisection {
            lo: 1.0,
            hi: 1000.0,
            tol: 0.01,
        },
        max_parallel: jobs,
    };
    let dir = tempfile::tempdir().unwrap();
    let rep = run_sweep(&spec, dir.path()).unwrap();
    let (lo, hi) = rep.bracket.expect("bisection bracket");
    let above = SweepParameter::Mass.apply(&base, 10.0 * hi).unwrap();
    let below = SweepParameter::Mass.apply(&base, 0.1 * lo).unwrap();
    let s_above = fks_core::run(&above).unwrap().final_state.status;
    let s_below = fks_core::run(&below).unwrap().final_state.status;
    let pass = hi / lo <= 1.01 && s_above.exit_code() == 10 && s_below.exit_code() == 0;
    verdict(
        6,
        pass,
        format!(
            "critical mass in [{lo:.6}, {hi:.6}] (ratio {:.5}), 10x hi -> {}, 0.1x lo -> {}",
            hi / lo,
            status_text(&s_above),
            status_text(&s_below)
        ),
    );
}

#[test]
fn criterion_07_steady_state() {
    let start = Instant::now();
    let (rho0, delta) = (1.0, 1.0);
    let g = Arc::new(Grid::new(64, 2.0 * std::f64::consts::PI).unwrap());
    let mut it = Integrator::new(
        Arc::clone(&g),
        DispersalOperator::riesz(1.5).unwrap(),
        ChemoParams::elliptic(delta).unwrap(),
        StepControl::default(),
    )
    .unwrap();
    let mut s = it
        .initial_state(RealField::constant(Arc::clone(&g), rho0), None)
        .unwrap();
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        it.step(&mut s, f64::INFINITY).unwrap();
        for (r, c) in s.rho.values().iter().zip(s.c.values()) {
            worst = worst.max((r - rho0).abs()).max((c - rho0 / delta).abs());
        }
    }
    let elapsed = start.elapsed();
    let pass = s.status.is_running()
        && s.step_count == 10_000
        && worst <= 1e-12
        && elapsed < Duration::from_secs(30);
    verdict(
        7,
        pass,
        format!(
            "max deviation {worst:.3e} over {} steps, {:.2}s",
            s.step_count,
            elapsed.as_secs_f64()
        ),
    );
}

fn smooth_run(n: usize, dt: f64, t_end: f64) -> RealField {
    let g = Arc::new(Grid::new(n, 40.0).unwrap());
    let ctrl = StepControl {
        dt_initial: Some(dt),
        adaptive: false,
        ..StepControl::default()
    };
    let mut it = Integrator::new(
        Arc::clone(&g),
        DispersalOperator::riesz(1.5).unwrap(),
        ChemoParams::elliptic(1.0).unwrap(),
        ctrl,
    )
    .unwrap();
    let rho0 = fks_core::InitialCondition::gaussian(8.0, 0.8)
        .build(&g, 0)
        .unwrap();
    let mut s = it.initial_state(rho0, None).unwrap();
    while s.status.is_running() && s.t < t_end {
        it.step(&mut s, t_end).unwrap();
    }
    assert!(s.status.is_running(), "{:?}", s.status);
    s.rho
}

fn max_diff_on_coarse(coarse: &RealField, fine: &RealField) -> f64 {
    let stride = fine.values().len() / coarse.values().len();
    coarse
        .values()
        .iter()
        .enumerate()
        .map(|(m, v)| (v - fine.values()[m * stride]).abs())
        .fold(0.0, f64::max)
}

#[test]
fn criterion_08_convergence_orders() {
    let t_end = 1.0;
    let dt = 0.02;
    let reference = smooth_run(256, dt / 8.0, t_end);
    let e1 = max_diff_on_coarse(&smooth_run(256, dt, t_end), &reference);
    let e2 = max_diff_on_coarse(&smooth_run(256, dt / 2.0, t_end), &reference);
    let temporal = e1 / e2;

    let dt_fine = 1e-3;
    let reference = smooth_run(2048, dt_fine, t_end);
    let s1 = max_diff_on_coarse(&smooth_run(256, dt_fine, t_end), &reference);
    let s2 = max_diff_on_coarse(&smooth_run(512, dt_fine, t_end), &reference);
    let spatial = s1 / s2;

    let pass = temporal >= 8.0 && spatial >= 10.0;
    verdict(
        8,
        pass,
        format!(
            "temporal factor {temporal:.2} ({e1:.3e} -> {e2:.3e}), spatial factor {spatial:.3e} ({s1:.3e} -> {s2:.3e})"
        ),
    );
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                out.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn criterion_09_determinism() {
    let cfg = preset("fractional", &[]);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run");
    execute(&cfg, &path).unwrap();
    let first = dir_bytes(&path);
    execute(&cfg, &path).unwrap();
    let second = dir_bytes(&path);
    let csv_and_meta = first
        .iter()
        .filter(|(n, _)| n.ends_with(".csv") || n.ends_with("metadata.json"))
        .count();
    let pass = first == second && csv_and_meta >= 3;
    verdict(
        9,
        pass,
        format!(
            "{} files compared byte for byte, identical: {}",
            first.len(),
            first == second
        ),
    );
}

#[test]
fn criterion_10_parseval_and_seminorm() {
    let run = fractional_run();
    let cfg = preset("fractional", &[]);
    let g = Arc::new(Grid::new(cfg.grid.n, cfg.grid.length).unwrap());
    let riesz2 = DispersalOperator::riesz(2.0).unwrap();
    let (mut worst_parseval, mut worst_seminorm) = (0.0f64, 0.0f64);
    let files = snapshot_files(&run.path);
    for f in &files {
        let (rho, c) = load_snapshot(f, &g).unwrap();
        for field in [Some(rho.clone()), c].into_iter().flatten() {
            let spec = field.forward();
            let (phys, spectral) = (lp_norm(&field, 2.0), spectral_l2(&spec));
            worst_parseval = worst_parseval.max((phys - spectral).abs() / phys);
        }
        let spec = rho.forward();
        let dx_norm = lp_norm(&spec.derivative(1).unwrap().backward(), 2.0);
        let semi = frac_seminorm(&spec, &riesz2);
        worst_seminorm = worst_seminorm.max((semi - dx_norm).abs() / dx_norm);
    }
    let pass = !files.is_empty() && worst_parseval <= 1e-12 && worst_seminorm <= 1e-12;
    verdict(
        10,
        pass,
        format!(
            "{} snapshots, Parseval defect {worst_parseval:.3e}, alpha=2 seminorm vs |rho_x|2 {worst_seminorm:.3e}",
            files.len()
        ),
    );
}
