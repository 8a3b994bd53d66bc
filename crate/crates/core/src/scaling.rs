//! Physical ↔ nondimensional parameters.
//!
//! With `X = (Dρ/κ)^{1/α}`, `T = 1/κ` and
//! `R = γ Dρ^{2/α} / (Dc κ^{2/α})`:
//!
//! ```text
//! x = X x̂,   t = T t̂,   ρ = R ρ̂
//! δ = Dρ^{2/α} β / (Dc κ^{2/α}),   τ = Dρ^{2/α} / (Dc κ^{2/α − 1})
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, RealField};

/// Above this `τ` the elliptic reduction is questionable.
pub const TAU_WARN_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParams {
    pub d_rho: f64,
    pub d_c: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub beta: f64,
    pub alpha: f64,
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("d_rho", self.d_rho),
            ("d_c", self.d_c),
            ("kappa", self.kappa),
            ("gamma", self.gamma),
            ("beta", self.beta),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(
                    format!("physical.{name}"),
                    format!("must be positive, got {v}"),
                ));
            }
        }
        if !(self.alpha > 1.0 && self.alpha <= 2.0) {
            return Err(Error::param(
                "physical.alpha",
                format!("must lie in (1, 2], got {}", self.alpha),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NondimParams {
    pub delta: f64,
    pub tau: f64,
    pub x_scale: f64,
    pub t_scale: f64,
    pub rho_scale: f64,
    /// Scale of `c` that makes the attractant equation dimensionless,
    /// `X²`. Not fixed by the density scaling; used only for output.
    pub c_scale: f64,
}

pub fn nondimensionalize(p: &PhysicalParams) -> Result<NondimParams> {
    p.validate()?;
    let e = 2.0 / p.alpha;
    let dr = p.d_rho.powf(e);
    let ke = p.kappa.powf(e);
    let x_scale = (p.d_rho / p.kappa).powf(1.0 / p.alpha);
    let tau = dr / (p.d_c * p.kappa.powf(e - 1.0));
    if tau > TAU_WARN_THRESHOLD {
        log::warn!(
            "tau = {tau:.3e} exceeds {TAU_WARN_THRESHOLD}; the parabolic-elliptic reduction may be inaccurate"
        );
    }
    Ok(NondimParams {
        delta: dr * p.beta / (p.d_c * ke),
        tau,
        x_scale,
        t_scale: 1.0 / p.kappa,
        rho_scale: p.gamma * dr / (p.d_c * ke),
        c_scale: x_scale * x_scale,
    })
}

impl NondimParams {
    fn check(&self) -> Result<()> {
        for (name, v) in [
            ("x_scale", self.x_scale),
            ("t_scale", self.t_scale),
            ("rho_scale", self.rho_scale),
            ("c_scale", self.c_scale),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn length(&self, nondim: f64) -> f64 {
        nondim * self.x_scale
    }

    pub fn time(&self, nondim: f64) -> f64 {
        nondim * self.t_scale
    }

    /// A grid of the same resolution on the physical box.
    pub fn grid(&self, g: &Grid) -> Result<Grid> {
        self.check()?;
        Grid::new(g.n(), self.length(g.length()))
    }

    /// Physical positions, density and attractant.
    pub fn dimensionalize(&self, rho: &RealField, c: &RealField) -> Result<PhysicalFields> {
        self.check()?;
        rho.grid().ensure_same(c.grid())?;
        let g = rho.grid();
        Ok(PhysicalFields {
            x: (0..g.n()).map(|m| self.length(g.x(m))).collect(),
            rho: rho.values().iter().map(|v| v * self.rho_scale).collect(),
            c: c.values().iter().map(|v| v * self.c_scale).collect(),
        })
    }

    /// Inverse of [`NondimParams::dimensionalize`] on the same grid.
    pub fn nondimensionalize_fields(
        &self,
        grid: &std::sync::Arc<Grid>,
        fields: &PhysicalFields,
    ) -> Result<(RealField, RealField)> {
        self.check()?;
        let rho = fields.rho.iter().map(|v| v / self.rho_scale).collect();
        let c = fields.c.iter().map(|v| v / self.c_scale).collect();
        Ok((
            RealField::new(std::sync::Arc::clone(grid), rho)?,
            RealField::new(std::sync::Arc::clone(grid), c)?,
        ))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalFields {
    pub x: Vec<f64>,
    pub rho: Vec<f64>,
    pub c: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn params(
        d_rho: f64,
        d_c: f64,
        kappa: f64,
        gamma: f64,
        beta: f64,
        alpha: f64,
    ) -> PhysicalParams {
        PhysicalParams {
            d_rho,
            d_c,
            kappa,
            gamma,
            beta,
            alpha,
        }
    }

    #[test]
    fn identity_parameters() {
        let n = nondimensionalize(&params(1.0, 1.0, 1.0, 1.0, 1.0, 2.0)).unwrap();
        for v in [n.delta, n.tau, n.x_scale, n.t_scale, n.rho_scale, n.c_scale] {
            assert!((v - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn hand_evaluated_examples() {
        let n = nondimensionalize(&params(2.0, 4.0, 1.0, 1.0, 1.0, 2.0)).unwrap();
        assert!((n.delta - 0.5).abs() < 1e-15);
        let n = nondimensionalize(&params(1.0, 1.0, 4.0, 1.0, 1.0, 2.0)).unwrap();
        assert!((n.x_scale - 0.5).abs() < 1e-15);
        assert!((n.delta - 0.25).abs() < 1e-15);
        assert!((n.t_scale - 0.25).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(nondimensionalize(&params(0.0, 1.0, 1.0, 1.0, 1.0, 2.0)).is_err());
        assert!(nondimensionalize(&params(1.0, -1.0, 1.0, 1.0, 1.0, 2.0)).is_err());
        assert!(nondimensionalize(&params(1.0, 1.0, 1.0, 1.0, 1.0, 1.0)).is_err());
        assert!(nondimensionalize(&params(1.0, 1.0, 1.0, f64::NAN, 1.0, 1.5)).is_err());
    }

    #[test]
    fn pure_scalings() {
        let s = NondimParams {
            delta: 1.0,
            tau: 1.0,
            x_scale: 0.5,
            t_scale: 1.0,
            rho_scale: 2.0,
            c_scale: 0.25,
        };
        let g = Arc::new(Grid::new(16, 100.0).unwrap());
        assert!((s.grid(&g).unwrap().length() - 50.0).abs() < 1e-12);
        let f = s
            .dimensionalize(
                &RealField::constant(Arc::clone(&g), 1.0),
                &RealField::zeros(Arc::clone(&g)),
            )
            .unwrap();
        assert!(f.rho.iter().all(|&v| v == 2.0));
    }

    proptest! {
        #[test]
        fn delta_tau_consistency(
            d_rho in 1e-3f64..1e3,
            d_c in 1e-3f64..1e3,
            kappa in 1e-3f64..1e3,
            gamma in 1e-3f64..1e3,
            beta in 1e-3f64..1e3,
            alpha in 1.001f64..2.0,
        ) {
            let n = nondimensionalize(&params(d_rho, d_c, kappa, gamma, beta, alpha)).unwrap();
            let via_tau = n.tau * beta / kappa;
            prop_assert!((n.delta - via_tau).abs() <= 1e-14 * n.delta.abs().max(via_tau.abs()));
        }

        #[test]
        fn classical_exponents(d_rho in 0.1f64..10.0, d_c in 0.1f64..10.0, kappa in 0.1f64..10.0) {
            let n = nondimensionalize(&params(d_rho, d_c, kappa, 1.0, 1.0, 2.0)).unwrap();
            prop_assert!((n.delta - d_rho / (d_c * kappa)).abs() <= 1e-14 * n.delta);
            prop_assert!((n.tau - d_rho / d_c).abs() <= 1e-14 * n.tau);
            prop_assert!((n.x_scale - (d_rho / kappa).sqrt()).abs() <= 1e-14 * n.x_scale);
        }

        #[test]
        fn field_roundtrip(seed in 0u64..1000, rs in 0.01f64..100.0, xs in 0.01f64..100.0) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let g = Arc::new(Grid::new(32, 10.0).unwrap());
            let rho = RealField::new(Arc::clone(&g), (0..32).map(|_| rng.random::<f64>()).collect()).unwrap();
            let c = RealField::from_fn(Arc::clone(&g), |x| x.sin());
            let s = NondimParams { delta: 1.0, tau: 1.0, x_scale: xs, t_scale: 1.0, rho_scale: rs, c_scale: xs * xs };
            let phys = s.dimensionalize(&rho, &c).unwrap();
            let (r2, c2) = s.nondimensionalize_fields(&g, &phys).unwrap();
            for (a, b) in r2.values().iter().zip(rho.values()) {
                prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300));
            }
            for (a, b) in c2.values().iter().zip(c.values()) {
                prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-12));
            }
        }
    }
}
