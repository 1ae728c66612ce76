//! Periodic x-grid on the torus `[0, 2π)` and density fields living on it.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodicGrid {
    n: usize,
}

impl PeriodicGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(Error::Domain(format!(
                "periodic grid needs an even number of points >= 4, got {n}"
            )));
        }
        Ok(Self { n })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        self.spacing() * i as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }

    /// Signed wavenumber of FFT slot `idx`; the Nyquist slot maps to `n/2`.
    pub fn wavenumber(&self, idx: usize) -> i64 {
        let n = self.n as i64;
        let i = idx as i64;
        if i <= n / 2 {
            i
        } else {
            i - n
        }
    }

    /// FFT slot holding wavenumber `k`.
    pub fn slot(&self, k: i64) -> usize {
        k.rem_euclid(self.n as i64) as usize
    }

    pub fn nyquist(&self) -> usize {
        self.n / 2
    }
}

/// Forward transform normalised so that `values[i] = Σ_k coeffs[k] e^{i k x_i}`.
pub fn forward(values: &[Complex64]) -> Vec<Complex64> {
    let n = values.len();
    let mut buf = values.to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|c| *c *= scale);
    buf
}

pub fn inverse(coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut buf = coeffs.to_vec();
    FftPlanner::new()
        .plan_fft_inverse(buf.len())
        .process(&mut buf);
    buf
}

/// Real density ρ(x_i) on a [`PeriodicGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    grid: PeriodicGrid,
    values: Vec<f64>,
}

impl DensityField {
    pub fn new(grid: PeriodicGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Domain(format!(
                "density has {} values but the grid has {} points",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("density contains non-finite values".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: PeriodicGrid, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.points().into_iter().map(f).collect();
        Self { grid, values }
    }

    pub fn constant(grid: PeriodicGrid, c: f64) -> Self {
        Self::from_fn(grid, |_| c)
    }

    /// Builds the field from Fourier coefficients, dropping imaginary round-off.
    pub fn from_spectrum(grid: PeriodicGrid, coeffs: &[Complex64]) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::Domain("spectrum length does not match grid".into()));
        }
        let values = inverse(coeffs).into_iter().map(|c| c.re).collect();
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> PeriodicGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Fourier coefficients `ρ̂_k` in FFT slot order.
    pub fn spectrum(&self) -> Vec<Complex64> {
        let data: Vec<Complex64> = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        forward(&data)
    }

    pub fn mode(&self, k: i64) -> Complex64 {
        self.spectrum()[self.grid.slot(k)]
    }

    /// `∫_0^{2π} ρ dx` by the trapezoidal rule (exact for band-limited fields).
    pub fn mass(&self) -> f64 {
        self.grid.spacing() * self.values.iter().sum::<f64>()
    }

    pub fn l2_norm(&self) -> f64 {
        (self.grid.spacing() * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `self - other`; panics on mismatched grids.
    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.grid, other.grid, "density fields live on different grids");
        Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// Shift by `s` grid points: `out[i] = self[i + s]`.
    pub fn roll(&self, s: isize) -> Self {
        let n = self.values.len() as isize;
        let values = (0..n)
            .map(|i| self.values[(i + s).rem_euclid(n) as usize])
            .collect();
        Self {
            grid: self.grid,
            values,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cosine_has_two_modes() {
        let g = PeriodicGrid::new(32).unwrap();
        let rho = DensityField::from_fn(g, |x| 1.0 + 0.5 * x.cos());
        let s = rho.spectrum();
        assert_abs_diff_eq!(s[0].re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s[g.slot(1)].re, 0.25, epsilon = 1e-14);
        assert_abs_diff_eq!(s[g.slot(-1)].re, 0.25, epsilon = 1e-14);
        for (idx, c) in s.iter().enumerate() {
            if g.wavenumber(idx).abs() > 1 {
                assert!(c.norm() < 1e-14);
            }
        }
        let back = DensityField::from_spectrum(g, &s).unwrap();
        for (a, b) in back.values().iter().zip(rho.values()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(rho.mass(), 2.0 * PI, epsilon = 1e-13);
    }

    #[test]
    fn odd_grid_rejected() {
        assert!(PeriodicGrid::new(31).is_err());
        assert!(PeriodicGrid::new(2).is_err());
    }
}
