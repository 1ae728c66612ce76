//! Limit operators: the fractional Laplacian in multiplier and singular-integral
//! form, the space-dependent kernel `γ(x, y)` with its operator `𝓛`, and
//! solvers for the limit equations on the torus.
//!
//! Singular integrals use the whole-line kernel applied to the periodic
//! extension of the density. For a grid spacing `h = 2π/n` the kernel sum runs
//! over the lattice distances `w = m h`, `1 ≤ m ≤ n (M + 1)`; the remaining
//! images are summed with Hurwitz zeta tails, and the missing near-diagonal
//! piece of the trapezoidal rule is restored with zeta-weighted derivative
//! corrections `ζ(α - 1) h^{2-α} ρ''` and `ζ(α - 3) h^{4-α} ρ'''' / 12`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::auxiliary::ZQuadrature;
use crate::equilibria::{CollisionModel, EquilibriumSpec};
use crate::error::{Error, Result};
use crate::grid::{DensityField, PeriodicGrid};
use crate::special::{gamma, gauss_legendre, gauss_legendre_on, hurwitz_zeta, riemann_zeta};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Default number of periodic kernel images.
pub const DEFAULT_IMAGES: usize = 64;
/// Fewest images accepted by the operator builders.
pub const MIN_IMAGES: usize = 8;
/// Grid used when calibrating `c_{N,α}`.
const CALIBRATION_POINTS: usize = 512;
/// Largest accepted relative gap between calibrated and closed-form `c_{N,α}`.
const CALIBRATION_TOLERANCE: f64 = 0.01;
/// Largest accepted asymmetry of an assembled `𝓛` matrix before symmetrization.
const ASYMMETRY_TOLERANCE: f64 = 1e-6;

/// `c_{N,α} = 2^α Γ((N+α)/2) / (π^{N/2} |Γ(-α/2)|)`.
pub fn closed_form_cnalpha(dim: usize, alpha: f64) -> f64 {
    let n = dim as f64;
    2f64.powf(alpha) * gamma(0.5 * (n + alpha))
        / (std::f64::consts::PI.powf(0.5 * n) * gamma(-0.5 * alpha).abs())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 2.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("alpha must lie in (0, 2), got {alpha}")))
    }
}

/// Calibrates `c_{N,α}` by applying the unnormalized singular integral to
/// `cos(kx)`, `k = 1, 2, 3`, and fitting the result to `|k|^α cos(kx)`.
pub fn calibrate_cnalpha(dim: usize, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if dim != 1 {
        return Err(Error::Domain(format!(
            "calibration is implemented on the one-dimensional torus, got dim = {dim}"
        )));
    }
    let grid = PeriodicGrid::new(CALIBRATION_POINTS)?;
    let pv = PvOperator::new(grid, alpha, DEFAULT_IMAGES, 1.0)?;
    let (mut num, mut den) = (0.0, 0.0);
    for k in 1..=3u32 {
        let target_scale = (k as f64).powf(alpha);
        let field = DensityField::from_fn(grid, |x| (k as f64 * x).cos());
        let raw = pv.apply(&field)?;
        for (r, f) in raw.values().iter().zip(field.values()) {
            num += r * target_scale * f;
            den += r * r;
        }
    }
    let fitted = num / den;
    let closed = closed_form_cnalpha(dim, alpha);
    let gap = (fitted / closed - 1.0).abs();
    if !(gap <= CALIBRATION_TOLERANCE) {
        return Err(Error::Calibration(format!(
            "fitted c = {fitted} differs from closed form {closed} by {:.3}%",
            100.0 * gap
        )));
    }
    Ok(fitted)
}

/// The normalizing constant and the diffusion coefficient of the constant
/// limit equation `∂_t ρ + κ (-Δ)^{α/2} ρ = 0`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FractionalConstant {
    pub dim: usize,
    pub alpha: f64,
    pub c_n_alpha: f64,
    pub kappa0: f64,
    /// `κ₀ / c_{N,α} · ∫_0^∞ z^α e^{-z} dz`
    pub kappa: f64,
    /// `∫_0^∞ z^α e^{-z} dz` by Gauss–Laguerre.
    pub gamma_moment: f64,
}

impl FractionalConstant {
    pub fn for_equilibrium(spec: &EquilibriumSpec) -> Result<Self> {
        let c = calibrate_cnalpha(spec.dim(), spec.alpha())?;
        Ok(Self::from_parts(spec.dim(), spec.alpha(), c, spec.kappa0()))
    }

    pub fn from_parts(dim: usize, alpha: f64, c_n_alpha: f64, kappa0: f64) -> Self {
        let gamma_moment = ZQuadrature::standard().power_moment(alpha);
        Self {
            dim,
            alpha,
            c_n_alpha,
            kappa0,
            kappa: kappa0 / c_n_alpha * gamma_moment,
            gamma_moment,
        }
    }

    /// Relative gap between the quadrature and Lanczos values of `Γ(α + 1)`.
    pub fn gamma_consistency(&self) -> f64 {
        (self.gamma_moment / gamma(self.alpha + 1.0) - 1.0).abs()
    }
}

/// `ρ̂(k) ← |k|^α ρ̂(k)`; the Nyquist mode is treated as `|n/2|`.
pub fn frac_laplacian_multiplier(rho: &DensityField, alpha: f64) -> DensityField {
    let grid = rho.grid();
    let spectrum: Vec<Complex64> = rho
        .spectrum()
        .into_iter()
        .enumerate()
        .map(|(idx, c)| c * (grid.wavenumber(idx).unsigned_abs() as f64).powf(alpha))
        .collect();
    DensityField::from_spectrum(grid, &spectrum).expect("spectrum has grid length")
}

/// Circulant discretization of `c PV ∫ (ρ(x) - ρ(y)) |x - y|^{-1-α} dy`.
#[derive(Debug, Clone)]
pub struct PvOperator {
    grid: PeriodicGrid,
    alpha: f64,
    scale: f64,
    /// `weights[r - 1]` multiplies `2ρ_i - ρ_{i+r} - ρ_{i-r}`, `r = 1..=n`.
    weights: Vec<f64>,
    zeta1: f64,
    zeta3: f64,
}

impl PvOperator {
    pub fn new(grid: PeriodicGrid, alpha: f64, images: usize, scale: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if images < MIN_IMAGES {
            return Err(Error::ImagesTooFew {
                given: images,
                required: MIN_IMAGES,
            });
        }
        let n = grid.len();
        let h = grid.spacing();
        let period = n as f64 * h;
        let weights = (1..=n)
            .map(|r| {
                let near: f64 = (0..=images)
                    .map(|q| ((q * n + r) as f64 * h).powf(-1.0 - alpha))
                    .sum();
                let tail = period.powf(-1.0 - alpha)
                    * hurwitz_zeta(1.0 + alpha, (images + 1) as f64 + r as f64 / n as f64);
                h * (near + tail)
            })
            .collect();
        Ok(Self {
            grid,
            alpha,
            scale,
            weights,
            zeta1: riemann_zeta(alpha - 1.0),
            zeta3: riemann_zeta(alpha - 3.0),
        })
    }

    pub fn apply(&self, rho: &DensityField) -> Result<DensityField> {
        if rho.grid() != self.grid {
            return Err(Error::Domain("field grid differs from operator grid".into()));
        }
        let n = self.grid.len();
        let h = self.grid.spacing();
        let r = rho.values();
        let at = |i: isize| r[i.rem_euclid(n as isize) as usize];
        let values = (0..n as isize)
            .into_par_iter()
            .map(|i| {
                let centre = r[i as usize];
                let mut acc = 0.0;
                for (m, w) in self.weights.iter().enumerate() {
                    let m = m as isize + 1;
                    acc += w * (2.0 * centre - at(i + m) - at(i - m));
                }
                let d2 = (-at(i + 2) + 16.0 * at(i + 1) - 30.0 * centre + 16.0 * at(i - 1)
                    - at(i - 2))
                    / (12.0 * h * h);
                let d4 = (at(i + 2) - 4.0 * at(i + 1) + 6.0 * centre - 4.0 * at(i - 1)
                    + at(i - 2))
                    / h.powi(4);
                acc += self.zeta1 * d2 * h.powf(2.0 - self.alpha)
                    + self.zeta3 * d4 / 12.0 * h.powf(4.0 - self.alpha);
                self.scale * acc
            })
            .collect();
        DensityField::new(self.grid, values)
    }
}

/// `c_{N,α} PV ∫ (ρ(x) - ρ(y)) |x - y|^{-N-α} dy` on the periodic extension.
pub fn frac_laplacian_pv(
    rho: &DensityField,
    alpha: f64,
    constant: &FractionalConstant,
) -> Result<DensityField> {
    PvOperator::new(rho.grid(), alpha, DEFAULT_IMAGES, constant.c_n_alpha)?.apply(rho)
}

/// `Φ(x) = ∫_0^x ν₀` tabulated on the grid with Gauss–Legendre per cell.
#[derive(Debug, Clone)]
struct Antiderivative {
    h: f64,
    values: Vec<f64>,
    period: f64,
}

impl Antiderivative {
    fn new(grid: PeriodicGrid, nu0: impl Fn(f64) -> f64) -> Self {
        let h = grid.spacing();
        let (t, w) = gauss_legendre(20);
        let mut values = Vec::with_capacity(grid.len() + 1);
        let mut acc = 0.0;
        values.push(0.0);
        for i in 0..grid.len() {
            let mid = (i as f64 + 0.5) * h;
            acc += 0.5 * h * t.iter().zip(&w).map(|(t, w)| w * nu0(mid + 0.5 * h * t)).sum::<f64>();
            values.push(acc);
        }
        let period = values.pop().expect("grid is non-empty");
        Self { h, values, period }
    }

    /// `Φ` at the real-line lattice point `j h`.
    fn at_index(&self, j: i64) -> f64 {
        let n = self.values.len() as i64;
        self.values[j.rem_euclid(n) as usize] + j.div_euclid(n) as f64 * self.period
    }

    fn mean_rate(&self) -> f64 {
        self.period / TWO_PI
    }

    /// Periodic part `Φ(jh) - ν̄ jh`.
    fn oscillation(&self, j: i64) -> f64 {
        self.at_index(j) - self.mean_rate() * j as f64 * self.h
    }
}

/// Space-dependent kernel `γ(x, y) = ν₀(x) ν₀(y) Γ(α+1) / A(x, y)^{α+1}` with
/// `A(x, y) = ∫_0^1 ν₀((1-s)x + sy) ds`.
#[derive(Debug, Clone)]
pub struct GammaKernel {
    pub alpha: f64,
    grid: PeriodicGrid,
    nu0: Vec<f64>,
    antiderivative: Antiderivative,
    /// `γ(x_i, x_j)` along the segment inside `[0, 2π)`.
    pub values: DMatrix<f64>,
    pub gamma1: f64,
    pub gamma2: f64,
    nu_range: (f64, f64),
    amplitude: f64,
    model: CollisionModel,
}

/// Builds `γ` on all grid pairs from the model's `ν₀(x)`.
pub fn build_gamma_kernel(
    model: &CollisionModel,
    alpha: f64,
    grid: PeriodicGrid,
) -> Result<GammaKernel> {
    check_alpha(alpha)?;
    let g = gamma(alpha + 1.0);
    let nu0: Vec<f64> = grid.points().iter().map(|&x| model.nu0(x)).collect();
    let antiderivative = Antiderivative::new(grid, |x| model.nu0(x));
    let n = grid.len();
    let h = grid.spacing();
    let mut values = DMatrix::zeros(n, n);
    let cols: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            (0..n)
                .map(|i| {
                    let a = if i == j {
                        nu0[i]
                    } else {
                        (antiderivative.at_index(j as i64) - antiderivative.at_index(i as i64))
                            / ((j as f64 - i as f64) * h)
                    };
                    nu0[i] * nu0[j] * g / a.powf(alpha + 1.0)
                })
                .collect()
        })
        .collect();
    for (j, col) in cols.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            values[(i, j)] = *v;
        }
    }
    let (nu1, nu2) = (model.nu1(), model.nu2());
    Ok(GammaKernel {
        alpha,
        grid,
        nu0,
        antiderivative,
        values,
        gamma1: nu1 * nu1 * g / nu2.powf(alpha + 1.0),
        gamma2: nu2 * nu2 * g / nu1.powf(alpha + 1.0),
        nu_range: (nu1, nu2),
        amplitude: model.grad_bound(),
        model: model.clone(),
    })
}

impl GammaKernel {
    pub fn grid(&self) -> PeriodicGrid {
        self.grid
    }

    /// `γ` between grid point `i` and the real-line lattice point `j h`.
    fn lattice(&self, i: usize, j: i64) -> f64 {
        let n = self.grid.len() as i64;
        let nu_y = self.nu0[j.rem_euclid(n) as usize];
        let a = if j == i as i64 {
            self.nu0[i]
        } else {
            (self.antiderivative.at_index(j) - self.antiderivative.at_index(i as i64))
                / ((j - i as i64) as f64 * self.grid.spacing())
        };
        self.nu0[i] * nu_y * gamma(self.alpha + 1.0) / a.powf(self.alpha + 1.0)
    }

    /// `γ(x, y)` from its defining double integral: Gauss–Legendre in `s`
    /// along the segment and a graded Gauss–Legendre rule in `z`.
    pub fn direct(&self, x: f64, y: f64) -> f64 {
        let nu0 = |p: f64| self.model.nu0(p);
        let (s, ws) = gauss_legendre_on(32, 0.0, 1.0);
        let a: f64 = s
            .iter()
            .zip(&ws)
            .map(|(s, w)| w * nu0((1.0 - s) * x + s * y))
            .sum();
        // geometric panels resolve z^α at the origin
        let upper = 60.0 / a;
        let mut edges = vec![0.0];
        let mut e = upper * 1e-12;
        while e < upper {
            edges.push(e);
            e *= 2.0;
        }
        edges.push(upper);
        let integral: f64 = edges
            .windows(2)
            .map(|p| {
                let (z, w) = gauss_legendre_on(16, p[0], p[1]);
                z.iter()
                    .zip(&w)
                    .map(|(z, w)| w * z.powf(self.alpha) * (-z * a).exp())
                    .sum::<f64>()
            })
            .sum();
        nu0(x) * nu0(y) * integral
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.grid.len();
        (0..n).all(|i| (0..i).all(|j| self.values[(i, j)] == self.values[(j, i)]))
    }

    pub fn within_bounds(&self) -> bool {
        self.values
            .iter()
            .all(|&g| g >= self.gamma1 * (1.0 - 1e-14) && g <= self.gamma2 * (1.0 + 1e-14))
    }

    pub fn nu_range(&self) -> (f64, f64) {
        self.nu_range
    }
}

/// Smallest image count for which the neglected second-order terms of the
/// `γ` tail expansion, `(δ/(ν̄ w))^2 w^{-1-α}` summed beyond the cutoff, stay
/// below `tolerance` for unit-amplitude densities.
pub fn required_images(kernel: &GammaKernel, tolerance: f64) -> usize {
    let alpha = kernel.alpha;
    let (nu1, nu2) = kernel.nu_range;
    let peak = nu2 * nu2 * gamma(alpha + 1.0) / nu1.powf(alpha + 1.0);
    let swing = 2.0 * kernel.amplitude / nu1;
    let coefficient = 4.0 * peak * 0.5 * (alpha + 1.0) * (alpha + 2.0) * swing * swing / (alpha + 2.0);
    let error = |m: usize| coefficient * (TWO_PI * (m + 1) as f64).powf(-2.0 - alpha);
    let mut m = MIN_IMAGES;
    while error(m) > tolerance && m < 1 << 20 {
        m += MIN_IMAGES;
    }
    m
}

/// Dense symmetric matrix of `𝓛(ρ) = PV ∫ γ(x, y) (ρ(x) - ρ(y)) |x - y|^{-1-α} dy`.
#[derive(Debug, Clone)]
pub struct LOperator {
    pub alpha: f64,
    pub matrix: DMatrix<f64>,
    /// Largest `|L_ij - L_ji|` before symmetrization.
    pub asymmetry: f64,
    grid: PeriodicGrid,
}

/// Assembles `𝓛` with `images` periodic images plus first-order tail
/// expansion, and the divergence-form local correction
/// `ζ(α-1) h^{2-α} (γ(x, x) ρ')'`, discretized as a symmetric fourth-order
/// staggered divergence.
pub fn assemble_l_operator(kernel: &GammaKernel, images: usize) -> Result<LOperator> {
    if images < MIN_IMAGES {
        return Err(Error::ImagesTooFew {
            given: images,
            required: MIN_IMAGES,
        });
    }
    let alpha = kernel.alpha;
    let grid = kernel.grid;
    let n = grid.len();
    let h = grid.spacing();
    let period = TWO_PI;
    let g = gamma(alpha + 1.0);
    let phi = &kernel.antiderivative;
    let mean = phi.mean_rate();
    let reach = (n * (images + 1)) as i64;
    let tail0: Vec<f64> = (1..=n)
        .map(|r| {
            h * period.powf(-1.0 - alpha)
                * hurwitz_zeta(1.0 + alpha, (images + 1) as f64 + r as f64 / n as f64)
        })
        .collect();
    let tail1: Vec<f64> = (1..=n)
        .map(|r| {
            h * period.powf(-2.0 - alpha)
                * hurwitz_zeta(2.0 + alpha, (images + 1) as f64 + r as f64 / n as f64)
        })
        .collect();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![0.0; n];
            for sign in [1i64, -1] {
                for m in 1..=reach {
                    let j = i as i64 + sign * m;
                    let w = m as f64 * h;
                    let c = h * kernel.lattice(i, j) * w.powf(-1.0 - alpha);
                    row[i] += c;
                    row[j.rem_euclid(n as i64) as usize] -= c;
                }
                // images beyond the cutoff: A = ν̄ + δ/(y - x), expanded to first order
                for r in 1..=n as i64 {
                    let j = i as i64 + sign * r;
                    let slot = j.rem_euclid(n as i64) as usize;
                    let base = kernel.nu0[i] * kernel.nu0[slot] * g / mean.powf(alpha + 1.0);
                    let delta = phi.oscillation(j) - phi.oscillation(i as i64);
                    let first = -base * (alpha + 1.0) * delta / mean * sign as f64;
                    let c = base * tail0[r as usize - 1] + first * tail1[r as usize - 1];
                    row[i] += c;
                    row[slot] -= c;
                }
            }
            row
        })
        .collect();
    let mut matrix = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    // -(γ ρ')' ≈ Dᵀ diag(γ_{i+1/2}) D ρ with the fourth-order staggered difference
    // (Dρ)_{i+1/2} = [27(ρ_{i+1} - ρ_i) - (ρ_{i+2} - ρ_{i-1})] / 24h
    let local = -riemann_zeta(alpha - 1.0) * h.powf(2.0 - alpha) / (24.0 * h * 24.0 * h);
    let stencil = [(-1i64, 1.0), (0, -27.0), (1, 27.0), (2, -1.0)];
    for i in 0..n {
        let mid = (kernel.model.nu0(grid.point(i) + 0.5 * h)).powf(1.0 - alpha) * g;
        for &(a, ca) in &stencil {
            for &(b, cb) in &stencil {
                let p = (i as i64 + a).rem_euclid(n as i64) as usize;
                let q = (i as i64 + b).rem_euclid(n as i64) as usize;
                matrix[(p, q)] += local * mid * ca * cb;
            }
        }
    }
    let mut asymmetry: f64 = 0.0;
    for i in 0..n {
        for j in 0..i {
            asymmetry = asymmetry.max((matrix[(i, j)] - matrix[(j, i)]).abs());
        }
    }
    if asymmetry > ASYMMETRY_TOLERANCE {
        return Err(Error::Construction(format!(
            "assembled operator is not self-adjoint: asymmetry {asymmetry:e}"
        )));
    }
    let symmetric = (&matrix + matrix.transpose()) * 0.5;
    Ok(LOperator {
        alpha,
        matrix: symmetric,
        asymmetry,
        grid,
    })
}

impl LOperator {
    pub fn grid(&self) -> PeriodicGrid {
        self.grid
    }

    pub fn apply(&self, rho: &DensityField) -> Result<DensityField> {
        if rho.grid() != self.grid {
            return Err(Error::Domain("field grid differs from operator grid".into()));
        }
        let out = &self.matrix * DVector::from_column_slice(rho.values());
        DensityField::new(self.grid, out.iter().copied().collect())
    }

    /// `⟨𝓛ρ, ρ⟩` with the trapezoidal inner product.
    pub fn quadratic_form(&self, rho: &DensityField) -> Result<f64> {
        let out = self.apply(rho)?;
        Ok(self.grid.spacing() * out.values().iter().zip(rho.values()).map(|(a, b)| a * b).sum::<f64>())
    }
}

/// Assembles `𝓛` for the given kernel with the default image count and applies it.
pub fn apply_l_operator(rho: &DensityField, kernel: &GammaKernel) -> Result<DensityField> {
    assemble_l_operator(kernel, DEFAULT_IMAGES)?.apply(rho)
}

/// Which limit equation `solve_fractional` integrates.
#[derive(Debug, Clone, Copy)]
pub enum LimitMode<'a> {
    /// `∂_t ρ + κ (-Δ)^{α/2} ρ = 0`
    Constant { kappa: f64, alpha: f64 },
    /// `∂_t ρ + κ₀ 𝓛 ρ = 0`
    Kernel { operator: &'a LOperator, kappa0: f64 },
}

/// Solutions of the limit equation at the requested times. The constant mode
/// is exact per Fourier mode; the kernel mode uses the exact matrix exponential
/// of the symmetric operator through its eigendecomposition.
pub fn solve_fractional(
    rho0: &DensityField,
    times: &[f64],
    mode: LimitMode<'_>,
) -> Result<Vec<DensityField>> {
    if let Some(t) = times.iter().find(|t| !(**t >= 0.0)) {
        return Err(Error::Domain(format!("times must be non-negative, got {t}")));
    }
    let grid = rho0.grid();
    match mode {
        LimitMode::Constant { kappa, alpha } => {
            let spectrum = rho0.spectrum();
            times
                .iter()
                .map(|&t| {
                    let evolved: Vec<Complex64> = spectrum
                        .iter()
                        .enumerate()
                        .map(|(idx, c)| {
                            let k = grid.wavenumber(idx).unsigned_abs() as f64;
                            c * (-kappa * k.powf(alpha) * t).exp()
                        })
                        .collect();
                    DensityField::from_spectrum(grid, &evolved)
                })
                .collect()
        }
        LimitMode::Kernel { operator, kappa0 } => {
            if operator.grid != grid {
                return Err(Error::Domain("field grid differs from operator grid".into()));
            }
            let eigen = SymmetricEigen::new(operator.matrix.clone() * kappa0);
            let coeffs = eigen.eigenvectors.transpose() * DVector::from_column_slice(rho0.values());
            times
                .iter()
                .map(|&t| {
                    let damped = DVector::from_fn(coeffs.len(), |k, _| {
                        coeffs[k] * (-eigen.eigenvalues[k].max(0.0) * t).exp()
                    });
                    let values = &eigen.eigenvectors * damped;
                    DensityField::new(grid, values.iter().copied().collect())
                })
                .collect()
        }
    }
}

const MAGIC: [u8; 4] = *b"FLOP";

/// Writes a dense square operator: 4-byte magic, `u32` size, `f64` α, then the
/// entries row-major, all little-endian.
pub fn export_operator(path: &Path, matrix: &DMatrix<f64>, alpha: f64) -> Result<()> {
    if matrix.nrows() != matrix.ncols() {
        return Err(Error::Domain("operator matrix must be square".into()));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let n = u32::try_from(matrix.nrows())
        .map_err(|_| Error::Domain("operator too large to export".into()))?;
    let mut write = |bytes: &[u8]| out.write_all(bytes).map_err(|e| Error::io(path, e));
    write(&MAGIC)?;
    write(&n.to_le_bytes())?;
    write(&alpha.to_le_bytes())?;
    for i in 0..matrix.nrows() {
        for j in 0..matrix.ncols() {
            write(&matrix[(i, j)].to_le_bytes())?;
        }
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Reads a matrix written by [`export_operator`]; returns it with its α.
pub fn import_operator(path: &Path) -> Result<(DMatrix<f64>, f64)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut input = BufReader::new(file);
    let mut header = [0u8; 16];
    input.read_exact(&mut header).map_err(|e| Error::io(path, e))?;
    if header[..4] != MAGIC {
        return Err(Error::Format {
            path: path.into(),
            message: "bad magic bytes".into(),
        });
    }
    let n = u32::from_le_bytes(header[4..8].try_into().expect("4 bytes")) as usize;
    let alpha = f64::from_le_bytes(header[8..16].try_into().expect("8 bytes"));
    let mut body = Vec::new();
    input.read_to_end(&mut body).map_err(|e| Error::io(path, e))?;
    if body.len() != n * n * 8 {
        return Err(Error::Format {
            path: path.into(),
            message: format!("expected {} payload bytes, found {}", n * n * 8, body.len()),
        });
    }
    let entries: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok((DMatrix::from_row_slice(n, n, &entries), alpha))
}
