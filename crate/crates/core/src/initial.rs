//! Initial densities on the periodic box.
//!
//! Localized kinds are sampled by the minimum-image distance to their
//! center, checked to decay to `EDGE_DECAY · peak` at the box edge, and
//! rescaled so the rectangle-rule mass is exactly the requested one.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::grid::{Grid, RealField};

/// Largest admissible edge value relative to the peak.
pub const EDGE_DECAY: f64 = 1e-14;

/// Smallest admissible width in grid spacings.
pub const MIN_WIDTH_POINTS: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub mass: f64,
    pub width: f64,
    /// Defaults to the box center.
    pub center: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum IcKind {
    Gaussian(Bump),
    MultiBump(Vec<Bump>),
    /// Gaussian envelope modulated by `exp` of a random Fourier series
    /// with `modes` terms and `1/j` amplitude decay.
    SeededRandom {
        seed: Option<u64>,
        mass: f64,
        modes: usize,
        width: f64,
    },
    /// Spatially constant density. Exempt from the edge-decay check.
    Uniform {
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialCondition {
    pub kind: IcKind,
    pub floor: f64,
}

impl InitialCondition {
    pub fn gaussian(mass: f64, width: f64) -> Self {
        InitialCondition {
            kind: IcKind::Gaussian(Bump {
                mass,
                width,
                center: None,
            }),
            floor: 0.0,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self.kind {
            IcKind::Gaussian(_) => "gaussian",
            IcKind::MultiBump(_) => "multi_bump",
            IcKind::SeededRandom { .. } => "seeded_random",
            IcKind::Uniform { .. } => "uniform",
        }
    }

    /// Total mass of the built field, including the floor.
    pub fn total_mass(&self, length: f64) -> f64 {
        let bumps = match &self.kind {
            IcKind::Gaussian(b) => b.mass,
            IcKind::MultiBump(bs) => bs.iter().map(|b| b.mass).sum(),
            IcKind::SeededRandom { mass, .. } => *mass,
            IcKind::Uniform { value } => value * length,
        };
        bumps + self.floor * length
    }

    /// Sets the mass excluding the floor. Multi-bump masses keep their
    /// ratios.
    pub fn set_mass(&mut self, mass: f64, length: f64) {
        match &mut self.kind {
            IcKind::Gaussian(b) => b.mass = mass,
            IcKind::MultiBump(bs) => {
                let total: f64 = bs.iter().map(|b| b.mass).sum();
                bs.iter_mut().for_each(|b| b.mass *= mass / total);
            }
            IcKind::SeededRandom { mass: m, .. } => *m = mass,
            IcKind::Uniform { value } => *value = mass / length,
        }
    }

    /// Parameter checks that need no grid.
    pub fn validate(&self) -> Result<()> {
        if !(self.floor.is_finite() && self.floor >= 0.0) {
            return Err(Error::param(
                "initial_condition.floor",
                format!("must be nonnegative, got {}", self.floor),
            ));
        }
        let bump = |b: &Bump, at: &str| -> Result<()> {
            positive(&format!("{at}.mass"), b.mass)?;
            positive(&format!("{at}.width"), b.width)?;
            if let Some(c) = b.center {
                if !c.is_finite() {
                    return Err(Error::param(format!("{at}.center"), "must be finite"));
                }
            }
            Ok(())
        };
        match &self.kind {
            IcKind::Gaussian(b) => bump(b, "initial_condition"),
            IcKind::MultiBump(bs) => {
                if bs.is_empty() {
                    return Err(Error::param("initial_condition.bumps", "must not be empty"));
                }
                for (i, b) in bs.iter().enumerate() {
                    bump(b, &format!("initial_condition.bumps[{i}]"))?;
                }
                Ok(())
            }
            IcKind::SeededRandom {
                mass, modes, width, ..
            } => {
                positive("initial_condition.mass", *mass)?;
                positive("initial_condition.width", *width)?;
                if *modes == 0 {
                    return Err(Error::param(
                        "initial_condition.modes",
                        "must be at least 1",
                    ));
                }
                Ok(())
            }
            IcKind::Uniform { value } => {
                if value.is_finite() && *value >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::param(
                        "initial_condition.value",
                        format!("must be nonnegative, got {value}"),
                    ))
                }
            }
        }
    }

    /// Samples the density. `default_seed` keys `SeededRandom` when it has
    /// no seed of its own.
    pub fn build(&self, grid: &Arc<Grid>, default_seed: u64) -> Result<RealField> {
        self.validate()?;
        let l = grid.length();
        let shape: Vec<f64> = match &self.kind {
            IcKind::Uniform { value } => {
                return Ok(RealField::constant(Arc::clone(grid), value + self.floor));
            }
            IcKind::Gaussian(b) => {
                let f = bump_profile(grid, b, "initial_condition")?;
                normalized(f, b.mass, grid.dx())
            }
            IcKind::MultiBump(bs) => {
                let mut total = vec![0.0; grid.n()];
                for (i, b) in bs.iter().enumerate() {
                    let f = bump_profile(grid, b, &format!("initial_condition.bumps[{i}]"))?;
                    let f = normalized(f, b.mass, grid.dx());
                    total.iter_mut().zip(f).for_each(|(t, v)| *t += v);
                }
                total
            }
            IcKind::SeededRandom {
                seed,
                mass,
                modes,
                width,
            } => {
                let envelope = Bump {
                    mass: *mass,
                    width: *width,
                    center: None,
                };
                let env = bump_profile(grid, &envelope, "initial_condition")?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(default_seed));
                let coeffs: Vec<(f64, f64)> = (1..=*modes)
                    .map(|j| {
                        let a: f64 = StandardNormal.sample(&mut rng);
                        let b: f64 = StandardNormal.sample(&mut rng);
                        (0.5 * a / j as f64, 0.5 * b / j as f64)
                    })
                    .collect();
                let f: Vec<f64> = env
                    .iter()
                    .enumerate()
                    .map(|(m, e)| {
                        let x = grid.x(m) * 2.0 * std::f64::consts::PI / l;
                        let s: f64 = coeffs
                            .iter()
                            .enumerate()
                            .map(|(j, (a, b))| {
                                let kx = (j + 1) as f64 * x;
                                a * kx.cos() + b * kx.sin()
                            })
                            .sum();
                        e * s.exp()
                    })
                    .collect();
                check_edges(&f, "initial_condition")?;
                normalized(f, *mass, grid.dx())
            }
        };
        let values = shape.into_iter().map(|v| v + self.floor).collect();
        RealField::new(Arc::clone(grid), values)
    }
}

/// `‖ρ₀‖₁`, `‖ρ₀‖₂` and `‖(ρ₀)_x‖₂`.
pub fn hypothesis_norms(rho: &RealField) -> [f64; 3] {
    let dx = rho.grid().dx();
    let l1 = rho.values().iter().map(|v| v.abs()).sum::<f64>() * dx;
    let l2 = (rho.values().iter().map(|v| v * v).sum::<f64>() * dx).sqrt();
    let d = rho
        .forward()
        .derivative(1)
        .expect("first derivative")
        .backward();
    let l2x = (d.values().iter().map(|v| v * v).sum::<f64>() * dx).sqrt();
    [l1, l2, l2x]
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be positive, got {v}")))
    }
}

fn bump_profile(grid: &Grid, b: &Bump, at: &str) -> Result<Vec<f64>> {
    let l = grid.length();
    if b.width < MIN_WIDTH_POINTS * grid.dx() {
        return Err(Error::param(
            format!("{at}.width"),
            format!(
                "under-resolved: width {} is below {MIN_WIDTH_POINTS}·dx = {}",
                b.width,
                MIN_WIDTH_POINTS * grid.dx()
            ),
        ));
    }
    let x0 = b.center.unwrap_or(0.5 * l);
    let f: Vec<f64> = (0..grid.n())
        .map(|m| {
            let mut d = (grid.x(m) - x0).rem_euclid(l);
            if d > 0.5 * l {
                d -= l;
            }
            (-d * d / (2.0 * b.width * b.width)).exp()
        })
        .collect();
    check_edges(&f, at)?;
    Ok(f)
}

fn check_edges(f: &[f64], at: &str) -> Result<()> {
    let peak = f.iter().fold(0.0f64, |m, v| m.max(*v));
    let edge = f[0].max(f[f.len() - 1]);
    if edge > EDGE_DECAY * peak {
        return Err(Error::param(
            at,
            format!("profile does not decay at the box edge ({edge:.3e} vs peak {peak:.3e})"),
        ));
    }
    Ok(())
}

fn normalized(f: Vec<f64>, mass: f64, dx: f64) -> Vec<f64> {
    let sum = f.iter().sum::<f64>() * dx;
    f.into_iter().map(|v| v * mass / sum).collect()
}
