//! Norms of `ρ` and `c` and the checkable identities and bounds the solution
//! must satisfy at every snapshot.
//!
//! Physical-space norms use the rectangle rule `((L/n) Σ|f|^p)^{1/p}`.
//! Spectral sums use the `L/n²` Parseval factor of the unnormalized forward
//! transform (see [`crate::grid`]).

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::chemo::solve_elliptic;
use crate::error::{Error, Result};
use crate::grid::{differentiate_in_place, RealField, SpectralField};
use crate::operators::DispersalOperator;

/// Tolerances used when flagging invariant violations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceSet {
    /// Relative drift allowed on `‖ρ‖₁`.
    pub mass: f64,
    /// Relative slack on the `c` identities and inequalities.
    pub inequality: f64,
    /// Admissible negative excursion as a fraction of `‖ρ‖∞`.
    pub positivity: f64,
}

impl Default for ToleranceSet {
    fn default() -> Self {
        ToleranceSet {
            mass: 1e-10,
            inequality: 1e-10,
            positivity: 1e-8,
        }
    }
}

impl ToleranceSet {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("tolerances.mass", self.mass),
            ("tolerances.inequality", self.inequality),
            ("tolerances.positivity", self.positivity),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::param(name, format!("must be nonnegative, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct InvariantFlags {
    pub mass_ok: bool,
    pub c_l1_ok: bool,
    pub c_l2_ok: bool,
    pub cx_bound_ok: bool,
    pub positivity_ok: bool,
}

impl InvariantFlags {
    pub fn all(&self) -> bool {
        self.mass_ok && self.c_l1_ok && self.c_l2_ok && self.cx_bound_ok && self.positivity_ok
    }

    pub fn as_array(&self) -> [(&'static str, bool); 5] {
        [
            ("mass_ok", self.mass_ok),
            ("c_l1_ok", self.c_l1_ok),
            ("c_l2_ok", self.c_l2_ok),
            ("cx_bound_ok", self.cx_bound_ok),
            ("positivity_ok", self.positivity_ok),
        ]
    }
}

/// Norms of a single field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldNorms {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub linf: f64,
    pub min: f64,
    /// `‖Λ^{α/2} f‖₂` for the operator passed to [`norms`], if any.
    pub frac_seminorm: Option<f64>,
}

/// One snapshot's worth of diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub dt: f64,
    pub l1_rho: f64,
    pub l2_rho: f64,
    pub l3_rho: f64,
    pub linf_rho: f64,
    pub min_rho: f64,
    pub frac_seminorm_rho: f64,
    /// `‖ρ_x‖₂`, reported only.
    pub l2_rhox: f64,
    pub l1_c: f64,
    pub l2_c: f64,
    pub linf_c: f64,
    pub l2_cx: f64,
    pub mass_drift_rel: f64,
    pub flags: InvariantFlags,
}

/// CSV header matching [`DiagnosticsRecord::csv_row`].
pub const CSV_HEADER: &str =
    "t,dt,l1_rho,l2_rho,l3_rho,linf_rho,min_rho,frac_seminorm_rho,l2_rhox,\
l1_c,l2_c,linf_c,l2_cx,mass_drift_rel,mass_ok,c_l1_ok,c_l2_ok,cx_bound_ok,positivity_ok";

/// Fixed 17-significant-digit float formatting used by every output file.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

impl DiagnosticsRecord {
    pub fn csv_row(&self) -> String {
        let nums = [
            self.t,
            self.dt,
            self.l1_rho,
            self.l2_rho,
            self.l3_rho,
            self.linf_rho,
            self.min_rho,
            self.frac_seminorm_rho,
            self.l2_rhox,
            self.l1_c,
            self.l2_c,
            self.linf_c,
            self.l2_cx,
            self.mass_drift_rel,
        ];
        let mut row: Vec<String> = nums.iter().map(|&v| fmt_f64(v)).collect();
        row.extend(self.flags.as_array().iter().map(|(_, b)| b.to_string()));
        row.join(",")
    }

    pub fn parse_csv_row(line: &str) -> Result<Self> {
        let cols: Vec<&str> = line.trim_end().split(',').collect();
        if cols.len() != 19 {
            return Err(Error::param(
                "diagnostics row",
                format!("expected 19 columns, got {}", cols.len()),
            ));
        }
        let num = |i: usize| -> Result<f64> {
            cols[i]
                .parse()
                .map_err(|_| Error::param("diagnostics row", format!("bad number `{}`", cols[i])))
        };
        let flag = |i: usize| -> Result<bool> {
            cols[i]
                .parse()
                .map_err(|_| Error::param("diagnostics row", format!("bad flag `{}`", cols[i])))
        };
        Ok(DiagnosticsRecord {
            t: num(0)?,
            dt: num(1)?,
            l1_rho: num(2)?,
            l2_rho: num(3)?,
            l3_rho: num(4)?,
            linf_rho: num(5)?,
            min_rho: num(6)?,
            frac_seminorm_rho: num(7)?,
            l2_rhox: num(8)?,
            l1_c: num(9)?,
            l2_c: num(10)?,
            linf_c: num(11)?,
            l2_cx: num(12)?,
            mass_drift_rel: num(13)?,
            flags: InvariantFlags {
                mass_ok: flag(14)?,
                c_l1_ok: flag(15)?,
                c_l2_ok: flag(16)?,
                cx_bound_ok: flag(17)?,
                positivity_ok: flag(18)?,
            },
        })
    }
}

/// Rectangle-rule `L^p` norm.
pub fn lp_norm(field: &RealField, p: f64) -> f64 {
    let dx = field.grid().dx();
    let sum: f64 = field.values().iter().map(|v| v.abs().powf(p)).sum();
    (dx * sum).powf(1.0 / p)
}

fn l2_norm(values: &[f64], dx: f64) -> f64 {
    (dx * values.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

/// `L²` norm through Parseval: `sqrt((L/n²) Σ |f̂|²)`.
pub fn spectral_l2(spec: &SpectralField) -> f64 {
    let g = spec.grid();
    let n = g.n() as f64;
    let energy: f64 = spec.coeffs().iter().map(|z| z.norm_sqr()).sum();
    (g.length() / (n * n) * energy).sqrt()
}

/// `‖h(D) f‖₂` where `h` is the operator's half symbol.
pub fn frac_seminorm(spec: &SpectralField, op: &DispersalOperator) -> f64 {
    let g = spec.grid();
    let n = g.n() as f64;
    let energy: f64 = spec
        .coeffs()
        .iter()
        .zip(g.wavenumbers())
        .map(|(z, &k)| op.half_symbol(k).powi(2) * z.norm_sqr())
        .sum();
    (g.length() / (n * n) * energy).sqrt()
}

/// All norms of one field.
pub fn norms(field: &RealField, op: Option<&DispersalOperator>) -> FieldNorms {
    let dx = field.grid().dx();
    let (mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0);
    for v in field.values() {
        let a = v.abs();
        s1 += a;
        s2 += a * a;
        s3 += a * a * a;
    }
    FieldNorms {
        l1: dx * s1,
        l2: (dx * s2).sqrt(),
        l3: (dx * s3).cbrt(),
        linf: field.max_abs(),
        min: field.min(),
        frac_seminorm: op.map(|op| frac_seminorm(&field.forward(), op)),
    }
}

/// Whole-line value of `∫ k²/(k²+δ)² dk`, the constant in
/// `‖c_x‖₂² ≤ ‖ρ‖₁² K(δ)`.
pub fn cx_bound_constant(delta: f64) -> Result<f64> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::param(
            "delta",
            format!("must be positive, got {delta}"),
        ));
    }
    Ok(PI / (2.0 * delta.sqrt()))
}

/// Measures a snapshot. Flags are left at their defaults; see
/// [`check_invariants`].
pub fn measure(
    rho: &RealField,
    c: &RealField,
    op: &DispersalOperator,
    t: f64,
    dt: f64,
) -> Result<DiagnosticsRecord> {
    rho.grid().ensure_same(c.grid())?;
    let g = rho.grid();
    let dx = g.dx();

    let rho_hat = rho.forward();
    let rn = norms(rho, None);
    let frac = frac_seminorm(&rho_hat, op);
    let l2_rhox = derivative_l2(&rho_hat, dx);

    let cn = norms(c, None);
    let l2_cx = derivative_l2(&c.forward(), dx);

    Ok(DiagnosticsRecord {
        t,
        dt,
        l1_rho: rn.l1,
        l2_rho: rn.l2,
        l3_rho: rn.l3,
        linf_rho: rn.linf,
        min_rho: rn.min,
        frac_seminorm_rho: frac,
        l2_rhox,
        l1_c: cn.l1,
        l2_c: cn.l2,
        linf_c: cn.linf,
        l2_cx,
        mass_drift_rel: 0.0,
        flags: InvariantFlags::default(),
    })
}

fn derivative_l2(spec: &SpectralField, dx: f64) -> f64 {
    let mut buf: Vec<Complex64> = spec.coeffs().to_vec();
    differentiate_in_place(spec.grid(), &mut buf, 1).expect("order 1 is valid");
    spec.grid().backward_in_place(&mut buf);
    let re: Vec<f64> = buf.iter().map(|z| z.re).collect();
    l2_norm(&re, dx)
}

/// Measures `ρ` with `c` recomputed from the elliptic balance.
pub fn measure_elliptic(
    rho: &RealField,
    op: &DispersalOperator,
    delta: f64,
    t: f64,
    dt: f64,
) -> Result<DiagnosticsRecord> {
    let c = solve_elliptic(rho, delta)?;
    measure(rho, &c, op, t, dt)
}

/// Evaluates every invariant of `record` against the run's `initial` record.
pub fn check_invariants(
    record: &DiagnosticsRecord,
    initial: &DiagnosticsRecord,
    delta: f64,
    tol: &ToleranceSet,
) -> Result<InvariantFlags> {
    let k = cx_bound_constant(delta)?;
    let c_mass = record.l1_rho / delta;
    Ok(InvariantFlags {
        mass_ok: (record.l1_rho - initial.l1_rho).abs() <= tol.mass * initial.l1_rho,
        c_l1_ok: (record.l1_c - c_mass).abs() <= tol.inequality * c_mass,
        c_l2_ok: record.l2_c <= record.l2_rho / delta * (1.0 + tol.inequality),
        cx_bound_ok: record.l2_cx.powi(2) <= record.l1_rho.powi(2) * k * (1.0 + tol.inequality),
        positivity_ok: record.min_rho >= -tol.positivity * record.linf_rho,
    })
}

/// Fills `mass_drift_rel` and `flags` in place.
pub fn annotate(
    record: &mut DiagnosticsRecord,
    initial: &DiagnosticsRecord,
    delta: f64,
    tol: &ToleranceSet,
) -> Result<()> {
    record.mass_drift_rel = if initial.l1_rho > 0.0 {
        (record.l1_rho - initial.l1_rho).abs() / initial.l1_rho
    } else {
        record.l1_rho
    };
    record.flags = check_invariants(record, initial, delta, tol)?;
    Ok(())
}
