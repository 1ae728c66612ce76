//! Velocity quadrature over the whole of ℝ^N for algebraically decaying
//! integrands.
//!
//! Each axis is compactified onto `(-1, 1)` and sampled with Gauss–Legendre
//! nodes, so there is no velocity cutoff. The tangent map `v = tan(πt/2)` turns
//! `F dv` into `dθ/π` for the Cauchy member; the algebraic map
//! `v = t (1 - t²)^{-1/α}` keeps `F dv` smooth at the endpoints for any α.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};
use statrs::function::beta::{beta, beta_reg};

use crate::equilibria::EquilibriumSpec;
use crate::error::{Error, Result};
use crate::special::{gamma, gauss_legendre};

pub const DEFAULT_VELOCITY_NODES: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    Tangent,
    Algebraic,
    /// Tangent for α = 1, algebraic otherwise.
    #[default]
    Auto,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VelocityQuadrature {
    dim: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    map_kind: MapKind,
    tail_cutoff: f64,
}

fn axis_rule(n: usize, map: MapKind, alpha: f64) -> (Vec<f64>, Vec<f64>) {
    let (t, w) = gauss_legendre(n);
    match map {
        MapKind::Tangent | MapKind::Auto => t
            .iter()
            .zip(&w)
            .map(|(&t, &w)| {
                let theta = FRAC_PI_2 * t;
                let c = theta.cos();
                (theta.tan(), FRAC_PI_2 * w / (c * c))
            })
            .unzip(),
        MapKind::Algebraic => {
            let p = 1.0 / alpha;
            t.iter()
                .zip(&w)
                .map(|(&t, &w)| {
                    let s = 1.0 - t * t;
                    let v = t * s.powf(-p);
                    let dv = s.powf(-p) + 2.0 * p * t * t * s.powf(-p - 1.0);
                    (v, w * dv)
                })
                .unzip()
        }
    }
}

pub fn build_velocity_quadrature(
    spec: &EquilibriumSpec,
    n_nodes: usize,
    map_kind: MapKind,
) -> Result<VelocityQuadrature> {
    if n_nodes % 2 != 0 {
        return Err(Error::Domain(format!(
            "velocity node count must be even, got {n_nodes}"
        )));
    }
    if n_nodes < 8 {
        return Err(Error::Domain(format!(
            "velocity node count {n_nodes} is below the minimum of 8"
        )));
    }
    let map = match map_kind {
        MapKind::Auto if spec.alpha() == 1.0 => MapKind::Tangent,
        MapKind::Auto => MapKind::Algebraic,
        m => m,
    };
    let (axis_v, axis_w) = axis_rule(n_nodes, map, spec.alpha());
    let dim = spec.dim();
    let total = n_nodes.pow(dim as u32);
    let mut nodes = Vec::with_capacity(total * dim);
    let mut weights = Vec::with_capacity(total);
    for flat in 0..total {
        let mut rem = flat;
        let mut w = 1.0;
        for _ in 0..dim {
            let i = rem % n_nodes;
            rem /= n_nodes;
            nodes.push(axis_v[i]);
            w *= axis_w[i];
        }
        weights.push(w);
    }
    let tail_cutoff = axis_v.iter().fold(0.0f64, |m, v| m.max(v.abs())) * (dim as f64).sqrt();
    Ok(VelocityQuadrature {
        dim,
        nodes,
        weights,
        map_kind: map,
        tail_cutoff,
    })
}

impl VelocityQuadrature {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, j: usize) -> &[f64] {
        &self.nodes[j * self.dim..(j + 1) * self.dim]
    }

    /// First velocity component of every node (the only one for N = 1).
    pub fn node_component(&self, j: usize) -> f64 {
        self.nodes[j * self.dim]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, j: usize) -> f64 {
        self.weights[j]
    }

    pub fn map_kind(&self) -> MapKind {
        self.map_kind
    }

    pub fn tail_cutoff(&self) -> f64 {
        self.tail_cutoff
    }

    /// Index of the node mirrored through the origin.
    pub fn mirror(&self, j: usize) -> usize {
        let n = (self.len() as f64).powf(1.0 / self.dim as f64).round() as usize;
        let mut rem = j;
        let mut out = 0;
        let mut stride = 1;
        for _ in 0..self.dim {
            let i = rem % n;
            rem /= n;
            out += (n - 1 - i) * stride;
            stride *= n;
        }
        out
    }

    /// `F(v_j)` at every node.
    pub fn sample_equilibrium(&self, spec: &EquilibriumSpec) -> Vec<f64> {
        (0..self.len()).map(|j| spec.eval(self.node(j))).collect()
    }

    pub fn integrate_real(&self, g: impl Fn(&[f64]) -> f64) -> Result<f64> {
        let mut sum = 0.0;
        for j in 0..self.len() {
            let v = self.node(j);
            let value = g(v);
            if !value.is_finite() {
                return Err(Error::NonFinite {
                    index: j,
                    node: v.to_vec(),
                    value,
                });
            }
            sum += self.weights[j] * value;
        }
        Ok(sum)
    }

    pub fn integrate_complex(
        &self,
        g: impl Fn(&[f64]) -> num_complex::Complex64,
    ) -> Result<num_complex::Complex64> {
        let mut sum = num_complex::Complex64::new(0.0, 0.0);
        for j in 0..self.len() {
            let v = self.node(j);
            let value = g(v);
            if !(value.re.is_finite() && value.im.is_finite()) {
                return Err(Error::NonFinite {
                    index: j,
                    node: v.to_vec(),
                    value: if value.re.is_finite() { value.im } else { value.re },
                });
            }
            sum += value * self.weights[j];
        }
        Ok(sum)
    }

    /// Weighted sum of already-sampled values.
    pub fn sum_samples(&self, samples: &[f64]) -> f64 {
        samples.iter().zip(&self.weights).map(|(s, w)| s * w).sum()
    }
}

/// `Σ_j w_j g(v_j)`, without any tail correction.
pub fn integrate(quad: &VelocityQuadrature, g: impl Fn(&[f64]) -> f64) -> Result<f64> {
    quad.integrate_real(g)
}

/// `∫_{|v| ≥ M} F dv`, exact for the generalized Cauchy family via the
/// incomplete beta function.
pub fn tail_mass(spec: &EquilibriumSpec, m: f64) -> f64 {
    if m <= 0.0 {
        return 1.0;
    }
    let n = spec.dim() as f64;
    let a = 0.5 * spec.alpha();
    let b = 0.5 * n;
    let x = 1.0 / (1.0 + m * m);
    let sphere = 2.0 * std::f64::consts::PI.powf(0.5 * n) / gamma(0.5 * n);
    spec.normalizer() * 0.5 * sphere * beta_reg(a, b, x) * beta(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::make_heavy_tail_family;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    #[test]
    fn cauchy_normalization_is_spectral() {
        let spec = make_heavy_tail_family(1.0, 1).unwrap();
        let q = build_velocity_quadrature(&spec, 64, MapKind::Tangent).unwrap();
        let mass = integrate(&q, |v| spec.eval(v)).unwrap();
        assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-10);
        let first = integrate(&q, |v| v[0] * spec.eval(v)).unwrap();
        assert!(first.abs() < 1e-15);
    }

    #[test]
    fn normalization_within_tolerance_all_alpha() {
        for &alpha in &[0.5, 1.0, 1.5] {
            let spec = make_heavy_tail_family(alpha, 1).unwrap();
            let q = build_velocity_quadrature(&spec, 128, MapKind::Auto).unwrap();
            let mass = q.sum_samples(&q.sample_equilibrium(&spec));
            assert!((mass - 1.0).abs() < 1e-8, "alpha {alpha}: {mass}");
        }
    }

    #[test]
    fn tensor_rule_in_two_dimensions() {
        let spec = make_heavy_tail_family(1.0, 2).unwrap();
        let error = |n| {
            let q = build_velocity_quadrature(&spec, n, MapKind::Auto).unwrap();
            assert_eq!(q.len(), n * n);
            (q.sum_samples(&q.sample_equilibrium(&spec)) - 1.0).abs()
        };
        // tensorised rules converge only algebraically for N > 1
        let (coarse, fine) = (error(32), error(64));
        assert!(fine < 1e-3, "{fine}");
        assert!(fine < coarse);
    }

    #[test]
    fn nodes_are_mirror_symmetric() {
        let spec = make_heavy_tail_family(1.3, 2).unwrap();
        let q = build_velocity_quadrature(&spec, 16, MapKind::Auto).unwrap();
        for j in 0..q.len() {
            let m = q.mirror(j);
            for d in 0..2 {
                assert_eq!(q.node(m)[d], -q.node(j)[d]);
            }
            assert_eq!(q.weight(m), q.weight(j));
        }
    }

    #[test]
    fn rejects_bad_node_counts() {
        let spec = make_heavy_tail_family(1.0, 1).unwrap();
        assert!(build_velocity_quadrature(&spec, 63, MapKind::Tangent).is_err());
        assert!(build_velocity_quadrature(&spec, 6, MapKind::Tangent).is_err());
    }

    #[test]
    fn non_finite_integrand_reports_node() {
        let spec = make_heavy_tail_family(1.0, 1).unwrap();
        let q = build_velocity_quadrature(&spec, 8, MapKind::Tangent).unwrap();
        let err = integrate(&q, |v| if v[0] > 0.0 { f64::NAN } else { 1.0 }).unwrap_err();
        assert!(matches!(err, Error::NonFinite { index: 4, .. }), "{err}");
    }

    #[test]
    fn tail_mass_values() {
        let spec = make_heavy_tail_family(1.0, 1).unwrap();
        assert_abs_diff_eq!(tail_mass(&spec, 1e-12), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(tail_mass(&spec, 1.0), 0.5, epsilon = 1e-13);
        let ratio = tail_mass(&spec, 20.0) / tail_mass(&spec, 10.0);
        assert!((ratio - 0.5).abs() < 0.05 * 0.5);
        for &alpha in &[0.5, 1.0, 1.5] {
            let spec = make_heavy_tail_family(alpha, 1).unwrap();
            let m: f64 = 50.0;
            let scaled = tail_mass(&spec, m) * m.powf(alpha);
            let expected = 2.0 * spec.kappa0() / alpha;
            assert!((scaled / expected - 1.0).abs() < 0.1, "alpha {alpha}");
        }
    }

    #[test]
    fn truncated_second_moment_diverges_linearly() {
        let spec = make_heavy_tail_family(1.0, 1).unwrap();
        let q = build_velocity_quadrature(&spec, 256, MapKind::Tangent).unwrap();
        let truncated = |cap: f64| {
            integrate(&q, |v| if v[0].abs() <= cap { v[0] * v[0] * spec.eval(v) } else { 0.0 })
                .unwrap()
        };
        // ∫_{|v|≤V} v² dv/(π(1+v²)) = 2(V - atan V)/π
        for &cap in &[10.0, 20.0, 40.0] {
            let exact = 2.0 * (cap - f64::atan(cap)) / std::f64::consts::PI;
            assert!((truncated(cap) / exact - 1.0).abs() < 0.05, "V = {cap}");
        }
        let growth = truncated(40.0) / truncated(20.0);
        assert!((growth - 2.0).abs() < 0.15, "{growth}");
    }

    #[test]
    fn resolvent_integral_matches_refined_simpson() {
        let spec = make_heavy_tail_family(1.0, 1).unwrap();
        let q = build_velocity_quadrature(&spec, 128, MapKind::Tangent).unwrap();
        let (eps, k) = (0.1, 1.0);
        let g = |v: f64| spec.eval1(v) / Complex64::new(1.0, -eps * v * k);
        let value = q.integrate_complex(|v| g(v[0])).unwrap();
        // composite Simpson in θ with v = tan θ, 10^6 intervals
        let n = 1_000_000usize;
        let h = std::f64::consts::PI / n as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 1..n {
            let theta = -FRAC_PI_2 + i as f64 * h;
            let c = theta.cos();
            let coef = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += g(theta.tan()) * (coef / (c * c));
        }
        let oracle = acc * (h / 3.0);
        assert!((value - oracle).norm() < 1e-8, "{value} vs {oracle}");
    }
}
