//! Linear relaxation operators acting on velocity slices.
//!
//! Both operators use the discretely normalised equilibrium
//! `F̃_j = F(v_j) / Σ_l w_l F(v_l)`, which makes `Σ_j w_j L(f)_j = 0` and
//! `L(F̃) = 0` hold to round-off on the quadrature.

use nalgebra::DMatrix;

use crate::equilibria::{CollisionModel, EquilibriumSpec};
use crate::velocity_grid::VelocityQuadrature;

/// Values `f(v_j)` at a fixed `x`.
#[derive(Debug, Clone)]
pub struct VelocitySlice<'a> {
    pub values: Vec<f64>,
    pub quad: &'a VelocityQuadrature,
    pub spec: &'a EquilibriumSpec,
}

impl<'a> VelocitySlice<'a> {
    pub fn new(values: Vec<f64>, quad: &'a VelocityQuadrature, spec: &'a EquilibriumSpec) -> Self {
        assert_eq!(values.len(), quad.len(), "slice length must match quadrature");
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self { values, quad, spec }
    }

    pub fn equilibrium(quad: &'a VelocityQuadrature, spec: &'a EquilibriumSpec) -> Self {
        Self::new(discrete_equilibrium(quad, spec), quad, spec)
    }

    pub fn density(&self) -> f64 {
        self.quad.sum_samples(&self.values)
    }

    /// `∫ f² / F dv`.
    pub fn weighted_norm_sq(&self) -> f64 {
        let eq = discrete_equilibrium(self.quad, self.spec);
        self.values
            .iter()
            .zip(&eq)
            .zip(self.quad.weights())
            .map(|((f, e), w)| w * f * f / e)
            .sum()
    }

    fn with_values(&self, values: Vec<f64>) -> Self {
        Self::new(values, self.quad, self.spec)
    }
}

/// `F(v_j)` rescaled so that the quadrature sees unit mass.
pub fn discrete_equilibrium(quad: &VelocityQuadrature, spec: &EquilibriumSpec) -> Vec<f64> {
    let raw = quad.sample_equilibrium(spec);
    let mass = quad.sum_samples(&raw);
    raw.into_iter().map(|f| f / mass).collect()
}

/// `L(f) = ⟨f⟩ F - f`.
pub fn apply_collision_simple<'a>(f: &VelocitySlice<'a>) -> VelocitySlice<'a> {
    let eq = discrete_equilibrium(f.quad, f.spec);
    let rho = f.density();
    f.with_values(eq.iter().zip(&f.values).map(|(e, v)| rho * e - v).collect())
}

/// Dense matrix of `L = K - ν` at one spatial point:
/// `L_{jl} = w_l σ(x, v_j, v_l) - δ_{jl} ν_l`, with `ν_l = Σ_j w_j σ(x, v_j, v_l)`.
#[derive(Debug, Clone)]
pub struct CollisionMatrix {
    matrix: DMatrix<f64>,
    nu: Vec<f64>,
}

impl CollisionMatrix {
    pub fn assemble(model: &CollisionModel, quad: &VelocityQuadrature, x: f64) -> Self {
        let n = quad.len();
        let eq = discrete_equilibrium(quad, model.spec());
        // σ̃(v_j, v_l) = b(x, v_j, v_l) F̃_j
        let mut sigma = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            for l in 0..n {
                sigma[(j, l)] = model.kernel(x, quad.node(j), quad.node(l)) * eq[j];
            }
        }
        let w = quad.weights();
        let nu: Vec<f64> = (0..n)
            .map(|l| (0..n).map(|j| w[j] * sigma[(j, l)]).sum())
            .collect();
        let mut matrix = sigma;
        for l in 0..n {
            for j in 0..n {
                matrix[(j, l)] *= w[l];
            }
            matrix[(l, l)] -= nu[l];
        }
        Self { matrix, nu }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Discrete collision frequency `ν(x, v_l)`.
    pub fn frequency(&self) -> &[f64] {
        &self.nu
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let n = f.len();
        let mut out = vec![0.0; n];
        for l in 0..n {
            let fl = f[l];
            if fl == 0.0 {
                continue;
            }
            let col = self.matrix.column(l);
            for j in 0..n {
                out[j] += col[j] * fl;
            }
        }
        out
    }
}

/// `L(f) = K(f) - ν f` for a general micro-reversible model at `x`.
pub fn apply_collision_general<'a>(
    model: &CollisionModel,
    x: f64,
    f: &VelocitySlice<'a>,
) -> VelocitySlice<'a> {
    let m = CollisionMatrix::assemble(model, f.quad, x);
    f.with_values(m.apply(&f.values))
}

/// `-½ ∬ σ(v, v') F' [f'/F' - f/F]² dv dv'` by double quadrature.
pub fn dirichlet_form(model: &CollisionModel, x: f64, f: &VelocitySlice<'_>) -> f64 {
    let quad = f.quad;
    let eq = discrete_equilibrium(quad, f.spec);
    let w = quad.weights();
    let ratio: Vec<f64> = f.values.iter().zip(&eq).map(|(v, e)| v / e).collect();
    let n = quad.len();
    let mut acc = 0.0;
    for j in 0..n {
        let mut row = 0.0;
        for l in 0..n {
            let sigma = model.kernel(x, quad.node(j), quad.node(l)) * eq[j];
            let d = ratio[l] - ratio[j];
            row += w[l] * sigma * eq[l] * d * d;
        }
        acc += w[j] * row;
    }
    -0.5 * acc
}

/// `∫ L(f) f / F dv` evaluated directly.
pub fn entropy_production(lf: &VelocitySlice<'_>, f: &VelocitySlice<'_>) -> f64 {
    let eq = discrete_equilibrium(f.quad, f.spec);
    lf.values
        .iter()
        .zip(&f.values)
        .zip(&eq)
        .zip(f.quad.weights())
        .map(|(((l, v), e), w)| w * l * v / e)
        .sum()
}
