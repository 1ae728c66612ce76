//! Auxiliary test functions `χ^ε` and the rescaled operator `𝓛^ε`.
//!
//! `χ^ε` solves `ν χ - ε v ∂_x χ = ν φ` along the characteristic through
//! `(x, v)`:
//!
//! ```text
//! χ^ε(x, v) = ∫_0^∞ exp(-∫_0^z ν(x + εvs, v) ds) ν(x + εvz, v) φ(x + εvz) dz
//! ```
//!
//! With the spatial variable `s = |εv| z` and periodic `φ` and `ν`, the
//! integral over the half line folds exactly onto one period:
//!
//! ```text
//! χ = [|εv| (1 - e^{-P/|εv|})]^{-1} ∫_0^{2π} e^{-N(s)/|εv|} ν φ ds,   P = N(2π)
//! ```
//!
//! which keeps the evaluation accurate for arbitrarily fast particles.

use std::sync::OnceLock;

use rayon::prelude::*;

use crate::equilibria::{CollisionModel, EquilibriumSpec};
use crate::error::{Error, Result};
use crate::grid::{DensityField, PeriodicGrid};
use crate::special::{gauss_laguerre, gauss_legendre, gauss_legendre_on};
use crate::velocity_grid::VelocityQuadrature;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Smooth 2π-periodic test function `φ(x, t)` with derivatives.
pub trait TestFunction: Send + Sync {
    fn value(&self, x: f64, t: f64) -> f64;
    fn gradient(&self, x: f64, t: f64) -> f64;
    fn hessian(&self, x: f64, t: f64) -> f64;
    fn time_derivative(&self, x: f64, t: f64) -> f64;
    /// Largest wavenumber present.
    fn bandwidth(&self) -> f64;
    /// Upper bound on `sup_x |φ(x, t)|` for all `t ≥ 0`.
    fn sup_bound(&self) -> f64;
}

/// `φ(x, t) = c + e^{-λt} Σ_m (a_m cos(k_m x) + b_m sin(k_m x))`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPolynomial {
    pub mean: f64,
    pub modes: Vec<(u32, f64, f64)>,
    pub decay: f64,
}

impl TrigPolynomial {
    pub fn constant(c: f64) -> Self {
        Self {
            mean: c,
            modes: Vec::new(),
            decay: 0.0,
        }
    }

    pub fn cosine(k: u32) -> Self {
        Self {
            mean: 0.0,
            modes: vec![(k, 1.0, 0.0)],
            decay: 0.0,
        }
    }

    pub fn sine(k: u32) -> Self {
        Self {
            mean: 0.0,
            modes: vec![(k, 0.0, 1.0)],
            decay: 0.0,
        }
    }

    pub fn with_decay(mut self, decay: f64) -> Self {
        self.decay = decay;
        self
    }

    pub fn sample(&self, grid: PeriodicGrid, t: f64) -> DensityField {
        DensityField::from_fn(grid, |x| self.value(x, t))
    }

    fn series(&self, x: f64, t: f64, order: u32) -> f64 {
        let time = (-self.decay * t).exp();
        let mut acc = 0.0;
        for &(k, a, b) in &self.modes {
            let kf = k as f64;
            let (s, c) = (kf * x).sin_cos();
            // d^n/dx^n of a cos + b sin cycles with period 4
            let term = match order % 4 {
                0 => a * c + b * s,
                1 => -a * s + b * c,
                2 => -(a * c + b * s),
                _ => a * s - b * c,
            };
            acc += term * kf.powi(order as i32);
        }
        acc * time
    }
}

impl TestFunction for TrigPolynomial {
    fn value(&self, x: f64, t: f64) -> f64 {
        self.mean + self.series(x, t, 0)
    }

    fn gradient(&self, x: f64, t: f64) -> f64 {
        self.series(x, t, 1)
    }

    fn hessian(&self, x: f64, t: f64) -> f64 {
        self.series(x, t, 2)
    }

    fn time_derivative(&self, x: f64, t: f64) -> f64 {
        -self.decay * self.series(x, t, 0)
    }

    fn bandwidth(&self) -> f64 {
        self.modes.iter().map(|m| m.0 as f64).fold(0.0, f64::max)
    }

    fn sup_bound(&self) -> f64 {
        self.mean.abs()
            + self
                .modes
                .iter()
                .map(|&(_, a, b)| (a * a + b * b).sqrt())
                .sum::<f64>()
    }
}

const PANEL_ORDER: usize = 12;

/// Quadrature for the `z`-integrals: Gauss–Laguerre for `∫_0^∞ e^{-z} g dz`
/// and a composite Gauss–Legendre panel rule (with its spectral integration
/// matrix) for the variable-exponent weight.
#[derive(Debug, Clone)]
pub struct ZQuadrature {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    panel_nodes: Vec<f64>,
    panel_weights: Vec<f64>,
    /// `cumulative[i][m] = ∫_{-1}^{t_i} ℓ_m(τ) dτ`
    cumulative: Vec<[f64; PANEL_ORDER]>,
}

impl ZQuadrature {
    pub fn new(n_laguerre: usize) -> Self {
        let (nodes, weights) = gauss_laguerre(n_laguerre);
        let (panel_nodes, panel_weights) = gauss_legendre(PANEL_ORDER);
        let lagrange = |m: usize, tau: f64| {
            panel_nodes
                .iter()
                .enumerate()
                .filter(|(q, _)| *q != m)
                .map(|(_, &tq)| (tau - tq) / (panel_nodes[m] - tq))
                .product::<f64>()
        };
        let cumulative = panel_nodes
            .iter()
            .map(|&ti| {
                let (sub, w) = gauss_legendre_on(PANEL_ORDER, -1.0, ti);
                let mut row = [0.0; PANEL_ORDER];
                for (m, r) in row.iter_mut().enumerate() {
                    *r = sub.iter().zip(&w).map(|(&s, &w)| w * lagrange(m, s)).sum();
                }
                row
            })
            .collect();
        Self {
            nodes,
            weights,
            panel_nodes,
            panel_weights,
            cumulative,
        }
    }

    /// Shared 64-node instance.
    pub fn standard() -> &'static ZQuadrature {
        static RULE: OnceLock<ZQuadrature> = OnceLock::new();
        RULE.get_or_init(|| ZQuadrature::new(64))
    }

    pub fn laguerre(&self) -> (&[f64], &[f64]) {
        (&self.nodes, &self.weights)
    }

    /// `∫_0^∞ e^{-z} g(z) dz`.
    pub fn integrate(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&z, &w)| w * g(z)).sum()
    }

    /// `∫_0^∞ z^a e^{-z} dz` (= Γ(a + 1)): power series on `[0, 1]`, Gauss–
    /// Laguerre on `[1, ∞)` where `(1 + y)^a` is smooth.
    pub fn power_moment(&self, a: f64) -> f64 {
        assert!(a > -1.0, "moment diverges for a <= -1");
        let mut head = 0.0;
        let mut fact = 1.0;
        for k in 0..60 {
            if k > 0 {
                fact *= k as f64;
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            head += sign / (fact * (a + k as f64 + 1.0));
        }
        let tail = (-1.0f64).exp() * self.integrate(|y| (1.0 + y).powf(a));
        head + tail
    }

    /// `∫_a^b e^{-N(s)/scale} g(s) ds` where `N(s) = ∫_a^s rate`; returns the
    /// integral and `N(b)`.
    fn weighted_panels(
        &self,
        length: f64,
        panels: usize,
        scale: f64,
        rate: impl Fn(f64) -> f64,
        g: impl Fn(f64) -> f64,
    ) -> (f64, f64) {
        let width = length / panels as f64;
        let half = 0.5 * width;
        let mut base = 0.0;
        let mut acc = 0.0;
        let mut rates = [0.0; PANEL_ORDER];
        let mut positions = [0.0; PANEL_ORDER];
        for p in 0..panels {
            let mid = (p as f64 + 0.5) * width;
            for i in 0..PANEL_ORDER {
                positions[i] = mid + half * self.panel_nodes[i];
                rates[i] = rate(positions[i]);
            }
            for i in 0..PANEL_ORDER {
                let n_here: f64 = base
                    + half
                        * self.cumulative[i]
                            .iter()
                            .zip(&rates)
                            .map(|(c, r)| c * r)
                            .sum::<f64>();
                acc += half
                    * self.panel_weights[i]
                    * (-n_here / scale).exp()
                    * g(positions[i]);
            }
            base += half * self.panel_weights.iter().zip(&rates).map(|(w, r)| w * r).sum::<f64>();
        }
        (acc, base)
    }
}

impl Default for ZQuadrature {
    fn default() -> Self {
        Self::new(64)
    }
}

/// Laguerre is used while `|εv| · bandwidth` stays below this.
const LAGUERRE_RANGE: f64 = 1.0;
/// `z`-truncation in units of `1/ν₁` (neglected mass `e^{-40}`).
const Z_MAX: f64 = 40.0;

fn panel_count(length: f64, decay_rate: f64, bandwidth: f64) -> usize {
    let by_decay = length * decay_rate / 2.0;
    let by_oscillation = length * bandwidth.max(1.0);
    (by_decay.max(by_oscillation).ceil() as usize).max(4)
}

/// `χ^ε` for `ν ≡ 1`: `∫_0^∞ e^{-z} φ(x + εvz, t) dz`.
pub fn eval_chi_simple(phi: &dyn TestFunction, epsilon: f64, x: f64, v: f64, t: f64) -> f64 {
    chi_simple_with(ZQuadrature::standard(), phi, epsilon, x, v, t)
}

pub fn chi_simple_with(
    zq: &ZQuadrature,
    phi: &dyn TestFunction,
    epsilon: f64,
    x: f64,
    v: f64,
    t: f64,
) -> f64 {
    let lam = epsilon * v;
    if lam == 0.0 {
        return phi.value(x, t);
    }
    let bw = phi.bandwidth().max(1.0);
    if lam.abs() * bw <= LAGUERRE_RANGE {
        return zq.integrate(|z| phi.value(x + lam * z, t));
    }
    let scale = lam.abs();
    let dir = lam.signum();
    let panels = panel_count(TWO_PI, 1.0 / scale, bw);
    let (integral, _) = zq.weighted_panels(TWO_PI, panels, scale, |_| 1.0, |s| {
        phi.value(x + dir * s, t)
    });
    integral / (scale * -(-TWO_PI / scale).exp_m1())
}

/// `χ^ε` for a general collision frequency `ν(x, v)`.
pub fn eval_chi_general(
    phi: &dyn TestFunction,
    model: &CollisionModel,
    epsilon: f64,
    x: f64,
    v: f64,
    t: f64,
) -> f64 {
    let lam = epsilon * v;
    if lam == 0.0 {
        return phi.value(x, t);
    }
    let scale = lam.abs();
    let dir = lam.signum();
    let zq = ZQuadrature::standard();
    let bw = phi.bandwidth().max(1.0);
    let reach = Z_MAX * scale / model.nu1();
    let rate = |s: f64| model.nu1d(x + dir * s, v);
    let g = |s: f64| {
        let y = x + dir * s;
        model.nu1d(y, v) * phi.value(y, t)
    };
    if reach <= TWO_PI {
        let panels = panel_count(reach, model.nu2() / scale, bw);
        let (integral, _) = zq.weighted_panels(reach, panels, scale, rate, g);
        integral / scale
    } else {
        let panels = panel_count(TWO_PI, model.nu2() / scale, bw);
        let (integral, period_rate) = zq.weighted_panels(TWO_PI, panels, scale, rate, g);
        integral / (scale * -(-period_rate / scale).exp_m1())
    }
}

/// `ε^{-α} ∫ F (χ^ε - φ) dv` (no model) or `ε^{-α} ∫ ν F (χ^ε - φ) dv`
/// (with model), sampled on `grid`.
pub fn apply_leps(
    phi: &dyn TestFunction,
    epsilon: f64,
    spec: &EquilibriumSpec,
    quad: &VelocityQuadrature,
    model: Option<&CollisionModel>,
    grid: PeriodicGrid,
    t: f64,
) -> Result<DensityField> {
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!(
            "rescaled operator needs epsilon > 0, got {epsilon}"
        )));
    }
    if spec.dim() != 1 || quad.dim() != 1 {
        return Err(Error::Domain("auxiliary functions are one-dimensional".into()));
    }
    let scale = epsilon.powf(-spec.alpha());
    let eq = quad.sample_equilibrium(spec);
    let values: Vec<f64> = grid
        .points()
        .par_iter()
        .map(|&x| {
            let base = phi.value(x, t);
            let mut acc = 0.0;
            for j in 0..quad.len() {
                let v = quad.node_component(j);
                let (chi, weight) = match model {
                    None => (eval_chi_simple(phi, epsilon, x, v, t), 1.0),
                    Some(m) => (eval_chi_general(phi, m, epsilon, x, v, t), m.nu1d(x, v)),
                };
                acc += quad.weight(j) * eq[j] * weight * (chi - base);
            }
            scale * acc
        })
        .collect();
    DensityField::new(grid, values)
}
