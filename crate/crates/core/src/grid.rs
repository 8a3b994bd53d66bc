//! Uniform periodic grid on `[0, L)` and the Fourier transform conventions
//! used throughout the crate.
//!
//! The forward transform is the plain unnormalized DFT
//! `f̂_j = Σ_m f_m e^{-2πi jm/n}` and the backward transform divides by `n`.
//! With this convention the discrete Parseval identity reads
//!
//! ```text
//! (L/n) Σ_m |f_m|² = (L/n²) Σ_j |f̂_j|²
//! ```
//!
//! and every spectral norm in [`crate::diagnostics`] carries that `L/n²`
//! factor explicitly.

use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Smallest admissible point count.
pub const MIN_POINTS: usize = 8;

/// Uniform periodic grid with cached FFT plans.
///
/// A grid is immutable after construction. The plans are `Sync`, and every
/// transform allocates its own scratch, so one grid can be shared across
/// threads behind an [`Arc`].
pub struct Grid {
    n: usize,
    length: f64,
    dx: f64,
    wavenumbers: Vec<f64>,
    forward_plan: Arc<dyn Fft<f64>>,
    backward_plan: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.n)
            .field("length", &self.length)
            .field("dx", &self.dx)
            .finish_non_exhaustive()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.length == other.length
    }
}

impl Grid {
    /// Builds a grid of `n` points on a box of size `length`.
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < MIN_POINTS {
            return Err(Error::InvalidGrid(format!(
                "n = {n} is below the minimum of {MIN_POINTS}"
            )));
        }
        if !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("n = {n} must be even")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "length = {length} must be positive and finite"
            )));
        }

        let base = 2.0 * std::f64::consts::PI / length;
        let wavenumbers = (0..n).map(|j| base * signed_index(j, n) as f64).collect();

        let mut planner = FftPlanner::new();
        Ok(Grid {
            n,
            length,
            dx: length / n as f64,
            wavenumbers,
            forward_plan: planner.plan_fft_forward(n),
            backward_plan: planner.plan_fft_inverse(n),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Wavenumbers `k_j = 2π j_signed / L` in standard FFT ordering.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Index of the Nyquist mode.
    pub fn nyquist(&self) -> usize {
        self.n / 2
    }

    /// Grid point `x_m = m·dx`.
    pub fn x(&self, m: usize) -> f64 {
        m as f64 * self.dx
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|m| self.x(m)).collect()
    }

    /// Whether mode `j` survives 2/3-rule truncation (`|j_signed| ≤ n/3`).
    pub fn retained_by_two_thirds(&self, j: usize) -> bool {
        signed_index(j, self.n).unsigned_abs() <= (self.n / 3) as u64
    }

    /// Unnormalized forward DFT in place.
    pub fn forward_in_place(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.n, "buffer length must equal grid size");
        self.forward_plan.process(buf);
    }

    /// Backward DFT in place, including the `1/n` normalization.
    pub fn backward_in_place(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.n, "buffer length must equal grid size");
        self.backward_plan.process(buf);
        let scale = 1.0 / self.n as f64;
        for z in buf.iter_mut() {
            *z *= scale;
        }
    }

    pub(crate) fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                left_n: self.n,
                left_length: self.length,
                right_n: other.n,
                right_length: other.length,
            })
        }
    }
}

/// Signed FFT index: `0, 1, …, n/2−1, −n/2, …, −1`.
pub fn signed_index(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// Real samples of a function on a grid.
#[derive(Debug, Clone)]
pub struct RealField {
    values: Vec<f64>,
    grid: Arc<Grid>,
}

impl RealField {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::param(
                "values",
                format!("expected {} samples, got {}", grid.n(), values.len()),
            ));
        }
        if let Some(m) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::param(
                "values",
                format!("sample {m} is not finite ({})", values[m]),
            ));
        }
        Ok(RealField { values, grid })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.n();
        RealField {
            values: vec![0.0; n],
            grid,
        }
    }

    pub fn constant(grid: Arc<Grid>, value: f64) -> Self {
        let n = grid.n();
        RealField {
            values: vec![value; n],
            grid,
        }
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.n()).map(|m| f(grid.x(m))).collect();
        RealField { values, grid }
    }

    /// Wraps samples that are known to be finite and correctly sized.
    pub(crate) fn from_parts(grid: Arc<Grid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n());
        RealField { values, grid }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Index of the largest sample.
    pub fn argmax(&self) -> usize {
        self.values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(im, vm), (i, &v)| {
                if v > vm {
                    (i, v)
                } else {
                    (im, vm)
                }
            })
            .0
    }

    pub fn forward(&self) -> SpectralField {
        let mut buf: Vec<Complex64> = self
            .values
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        self.grid.forward_in_place(&mut buf);
        SpectralField {
            coeffs: buf,
            grid: Arc::clone(&self.grid),
        }
    }
}

/// Fourier coefficients of a field, unnormalized forward convention.
#[derive(Debug, Clone)]
pub struct SpectralField {
    coeffs: Vec<Complex64>,
    grid: Arc<Grid>,
}

impl SpectralField {
    pub fn new(grid: Arc<Grid>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.n() {
            return Err(Error::param(
                "coeffs",
                format!("expected {} coefficients, got {}", grid.n(), coeffs.len()),
            ));
        }
        if coeffs
            .iter()
            .any(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(Error::param("coeffs", "non-finite coefficient"));
        }
        Ok(SpectralField { coeffs, grid })
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Inverse transform keeping the full complex result.
    pub fn backward_complex(&self) -> Vec<Complex64> {
        let mut buf = self.coeffs.clone();
        self.grid.backward_in_place(&mut buf);
        buf
    }

    /// Inverse transform, discarding the imaginary residue.
    pub fn backward(&self) -> RealField {
        let values = self.backward_complex().into_iter().map(|z| z.re).collect();
        RealField::from_parts(Arc::clone(&self.grid), values)
    }

    /// Largest violation of `coeffs[j] = conj(coeffs[n−j])`, relative to the
    /// largest coefficient magnitude.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        let n = self.coeffs.len();
        let scale = self.coeffs.iter().fold(0.0f64, |a, z| a.max(z.norm()));
        if scale == 0.0 {
            return 0.0;
        }
        let worst = (1..n)
            .map(|j| (self.coeffs[j] - self.coeffs[n - j].conj()).norm())
            .fold(self.coeffs[0].im.abs(), f64::max);
        worst / scale
    }

    /// Spectral derivative of order 1 or 2: multiplies mode `j` by
    /// `(i k_j)^order`. Odd orders zero the Nyquist mode.
    pub fn derivative(&self, order: u32) -> Result<SpectralField> {
        let mut out = self.clone();
        differentiate_in_place(&self.grid, &mut out.coeffs, order)?;
        Ok(out)
    }
}

/// In-place form of [`SpectralField::derivative`] for work buffers.
pub fn differentiate_in_place(grid: &Grid, coeffs: &mut [Complex64], order: u32) -> Result<()> {
    let k = grid.wavenumbers();
    match order {
        1 => {
            for (z, &kj) in coeffs.iter_mut().zip(k) {
                *z = Complex64::new(-kj * z.im, kj * z.re);
            }
            coeffs[grid.nyquist()] = Complex64::new(0.0, 0.0);
        }
        2 => {
            for (z, &kj) in coeffs.iter_mut().zip(k) {
                *z *= -kj * kj;
            }
        }
        _ => {
            return Err(Error::param(
                "order",
                format!("spectral derivative order must be 1 or 2, got {order}"),
            ))
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(n: usize, l: f64) -> Arc<Grid> {
        Arc::new(Grid::new(n, l).unwrap())
    }

    #[test]
    fn fft_ordering_on_eight_points() {
        let g = Grid::new(8, 2.0 * PI).unwrap();
        let expected = [0.0, 1.0, 2.0, 3.0, -4.0, -3.0, -2.0, -1.0];
        for (k, e) in g.wavenumbers().iter().zip(expected) {
            assert!((k - e).abs() < 1e-15, "{k} vs {e}");
        }
        assert!((g.dx() - PI / 4.0).abs() < 1e-15);
        assert_eq!(g.dx() * 8.0, g.length());
    }

    #[test]
    fn first_wavenumber_on_long_box() {
        let g = Grid::new(16, 100.0).unwrap();
        assert!((g.wavenumbers()[1] - 0.0628318).abs() < 1e-7);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(Grid::new(4, 2.0 * PI).is_err());
        assert!(Grid::new(9, 1.0).is_err());
        assert!(Grid::new(10, 0.0).is_err());
        assert!(Grid::new(10, -3.0).is_err());
        assert!(Grid::new(10, f64::NAN).is_err());
    }

    #[test]
    fn wavenumbers_are_antisymmetric() {
        let g = Grid::new(32, 7.0).unwrap();
        let k = g.wavenumbers();
        assert_eq!(k[0], 0.0);
        for j in 1..16 {
            assert_eq!(k[j], -k[32 - j]);
        }
    }

    #[test]
    fn constant_has_only_dc() {
        let g = grid(8, 2.0 * PI);
        let spec = RealField::constant(g, 1.0).forward();
        assert!((spec.coeffs()[0].re - 8.0).abs() < 1e-14);
        for z in &spec.coeffs()[1..] {
            assert!(z.norm() < 1e-14);
        }
    }

    #[test]
    fn cosine_lives_in_first_harmonic() {
        let g = grid(16, 2.0 * PI);
        let spec = RealField::from_fn(Arc::clone(&g), f64::cos).forward();
        for (j, z) in spec.coeffs().iter().enumerate() {
            if j == 1 || j == 15 {
                assert!((z.re - 8.0).abs() < 1e-13);
            } else {
                assert!(z.norm() < 1e-13, "mode {j} = {z}");
            }
        }
    }

    #[test]
    fn derivative_of_harmonics() {
        let g = grid(32, 2.0 * PI);
        let d1 = RealField::from_fn(Arc::clone(&g), f64::cos)
            .forward()
            .derivative(1)
            .unwrap()
            .backward();
        for (m, v) in d1.values().iter().enumerate() {
            assert!((v + g.x(m).sin()).abs() < 1e-12);
        }
        let d2 = RealField::from_fn(Arc::clone(&g), |x| (3.0 * x).sin())
            .forward()
            .derivative(2)
            .unwrap()
            .backward();
        for (m, v) in d2.values().iter().enumerate() {
            assert!((v + 9.0 * (3.0 * g.x(m)).sin()).abs() < 1e-12);
        }
        let dc = RealField::constant(Arc::clone(&g), 3.5)
            .forward()
            .derivative(1)
            .unwrap();
        assert!(dc.coeffs().iter().all(|z| z.re == 0.0 && z.im == 0.0));
    }

    #[test]
    fn derivative_order_is_checked() {
        let g = grid(8, 1.0);
        let spec = RealField::zeros(g).forward();
        assert!(spec.derivative(0).is_err());
        assert!(spec.derivative(3).is_err());
    }

    #[test]
    fn odd_derivative_zeroes_nyquist() {
        let g = grid(8, 2.0 * PI);
        let alt = RealField::from_fn(Arc::clone(&g), |x| (4.0 * x).cos());
        let d = alt.forward().derivative(1).unwrap();
        assert_eq!(d.coeffs()[4], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn two_thirds_mask() {
        let g = Grid::new(12, 1.0).unwrap();
        let kept: Vec<usize> = (0..12).filter(|&j| g.retained_by_two_thirds(j)).collect();
        assert_eq!(kept, vec![0, 1, 2, 3, 4, 8, 9, 10, 11]);
    }

    #[test]
    fn field_validation() {
        let g = grid(8, 1.0);
        assert!(RealField::new(Arc::clone(&g), vec![0.0; 7]).is_err());
        let mut v = vec![0.0; 8];
        v[3] = f64::INFINITY;
        assert!(RealField::new(g, v).is_err());
    }
}
