//! Heavy-tail equilibria and linear collision models built on them.
//!
//! The equilibrium family is the generalized Cauchy density
//! `F(v) = a (1 + |v|²)^{-(N+α)/2}`, whose tail constant is its normalizer.
//! Collision models are micro-reversible: `σ(x, v, v') = b(x, v, v') F(v)`
//! with `b` symmetric in `(v, v')`, so `L(F) = 0` by construction.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{gamma, gauss_legendre_on};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSpec {
    dim: usize,
    alpha: f64,
    kappa0: f64,
    normalizer: f64,
}

/// Generalized Cauchy equilibrium with tail exponent `alpha` in dimension `dim`.
pub fn make_heavy_tail_family(alpha: f64, dim: usize) -> Result<EquilibriumSpec> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 2), got {alpha}")));
    }
    if dim < 1 {
        return Err(Error::Domain("velocity dimension must be at least 1".into()));
    }
    let n = dim as f64;
    let normalizer = gamma(0.5 * (n + alpha)) / (PI.powf(0.5 * n) * gamma(0.5 * alpha));
    Ok(EquilibriumSpec {
        dim,
        alpha,
        kappa0: normalizer,
        normalizer,
    })
}

/// `κ₀ = lim |v|^{N+α} F(v)`.
pub fn tail_constant(spec: &EquilibriumSpec) -> f64 {
    spec.kappa0
}

impl EquilibriumSpec {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn kappa0(&self) -> f64 {
        self.kappa0
    }

    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    /// Radial profile `F(r)` with `r = |v|`.
    pub fn radial(&self, r: f64) -> f64 {
        let p = 0.5 * (self.dim as f64 + self.alpha);
        self.normalizer * (1.0 + r * r).powf(-p)
    }

    pub fn eval(&self, v: &[f64]) -> f64 {
        debug_assert_eq!(v.len(), self.dim);
        self.radial(v.iter().map(|c| c * c).sum::<f64>().sqrt())
    }

    /// One-dimensional shorthand.
    pub fn eval1(&self, v: f64) -> f64 {
        self.radial(v.abs())
    }

    /// `|v|^{N+α} F(v)` at radius `r`; tends to `κ₀`.
    pub fn tail_profile(&self, r: f64) -> f64 {
        r.powf(self.dim as f64 + self.alpha) * self.radial(r)
    }
}

/// Spatial/velocity dependence of the collision frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CollisionProfile {
    /// `ν ≡ 1`, `σ(v, v') = F(v)`: the relaxation operator `⟨f⟩F - f`.
    Constant,
    /// `ν(x, v) = ν₀(x) = 1 + a cos x`.
    Smooth { amplitude: f64 },
    /// `ν(x, v) = ν₀(x)(1 + β ψ(v) m_ψ)` with a compact bump `ψ` on `|v| < C`,
    /// so `ν = ν₀(x)` exactly for `|v| ≥ C`.
    Blended {
        amplitude: f64,
        core_radius: f64,
        strength: f64,
    },
}

impl CollisionProfile {
    pub fn id(&self) -> &'static str {
        match self {
            CollisionProfile::Constant => "constant",
            CollisionProfile::Smooth { .. } => "smooth",
            CollisionProfile::Blended { .. } => "blended",
        }
    }

    fn amplitude(&self) -> f64 {
        match *self {
            CollisionProfile::Constant => 0.0,
            CollisionProfile::Smooth { amplitude } | CollisionProfile::Blended { amplitude, .. } => {
                amplitude
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollisionModel {
    spec: EquilibriumSpec,
    profile: CollisionProfile,
    nu1: f64,
    nu2: f64,
    /// `∫ ψ F dv` for the blended profile, 0 otherwise.
    bump_mass: f64,
}

/// Smooth compactly supported bump, `ψ(0) = 1`, `ψ = 0` for `r ≥ c`.
fn bump(r: f64, c: f64) -> f64 {
    let t = r / c;
    if t >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    }
}

pub fn make_collision_model(
    profile: CollisionProfile,
    nu1: f64,
    nu2: f64,
    spec: &EquilibriumSpec,
) -> Result<CollisionModel> {
    if !(nu1 > 0.0 && nu1 <= nu2) {
        return Err(Error::Construction(format!(
            "need 0 < nu1 <= nu2, got nu1 = {nu1}, nu2 = {nu2}"
        )));
    }
    let a = profile.amplitude();
    if a.abs() >= 1.0 {
        return Err(Error::Construction(format!(
            "profile amplitude must satisfy |a| < 1, got {a}"
        )));
    }
    let mut bump_mass = 0.0;
    let mut peak = 1.0;
    if let CollisionProfile::Blended {
        core_radius,
        strength,
        ..
    } = profile
    {
        if spec.dim() != 1 {
            return Err(Error::Construction(
                "blended profile is implemented for one velocity dimension".into(),
            ));
        }
        if !(core_radius > 0.0) || !(strength >= 0.0) {
            return Err(Error::Construction(format!(
                "blended profile needs C > 0 and beta >= 0, got C = {core_radius}, beta = {strength}"
            )));
        }
        bump_mass = composite_bump_mass(spec, core_radius);
        peak = 1.0 + strength;
    }
    let lo = 1.0 - a.abs();
    let hi = (1.0 + a.abs()) * peak;
    if lo < nu1 - 1e-14 || hi > nu2 + 1e-14 {
        return Err(Error::Construction(format!(
            "collision frequency range [{lo}, {hi}] is not inside [nu1, nu2] = [{nu1}, {nu2}]"
        )));
    }
    Ok(CollisionModel {
        spec: *spec,
        profile,
        nu1,
        nu2,
        bump_mass,
    })
}

fn composite_bump_mass(spec: &EquilibriumSpec, c: f64) -> f64 {
    let panels = 64;
    let width = 2.0 * c / panels as f64;
    (0..panels)
        .map(|p| {
            let a = -c + p as f64 * width;
            let (x, w) = gauss_legendre_on(16, a, a + width);
            x.iter()
                .zip(&w)
                .map(|(&v, &w)| w * bump(v.abs(), c) * spec.eval1(v))
                .sum::<f64>()
        })
        .sum()
}

impl CollisionModel {
    pub fn spec(&self) -> &EquilibriumSpec {
        &self.spec
    }

    pub fn profile(&self) -> CollisionProfile {
        self.profile
    }

    pub fn nu1(&self) -> f64 {
        self.nu1
    }

    pub fn nu2(&self) -> f64 {
        self.nu2
    }

    /// Large-|v| limit `ν₀(x)`.
    pub fn nu0(&self, x: f64) -> f64 {
        1.0 + self.profile.amplitude() * x.cos()
    }

    /// Bound on `|∂_x ν|`.
    pub fn grad_bound(&self) -> f64 {
        let a = self.profile.amplitude().abs();
        match self.profile {
            CollisionProfile::Blended { strength, .. } => a * (1.0 + strength * self.bump_mass),
            _ => a,
        }
    }

    /// Whether ν depends on v at all.
    pub fn velocity_dependent(&self) -> bool {
        matches!(self.profile, CollisionProfile::Blended { .. })
    }

    fn bump_factor(&self, v: &[f64]) -> f64 {
        match self.profile {
            CollisionProfile::Blended { core_radius, .. } => {
                bump(v.iter().map(|c| c * c).sum::<f64>().sqrt(), core_radius)
            }
            _ => 0.0,
        }
    }

    fn strength(&self) -> f64 {
        match self.profile {
            CollisionProfile::Blended { strength, .. } => strength,
            _ => 0.0,
        }
    }

    /// Symmetric part `b(x, v, v')` of the cross-section.
    pub fn kernel(&self, x: f64, v: &[f64], vp: &[f64]) -> f64 {
        match self.profile {
            CollisionProfile::Constant => 1.0,
            CollisionProfile::Smooth { .. } => self.nu0(x),
            CollisionProfile::Blended { .. } => {
                self.nu0(x) * (1.0 + self.strength() * self.bump_factor(v) * self.bump_factor(vp))
            }
        }
    }

    /// `σ(x, v, v') = b(x, v, v') F(v)`.
    pub fn sigma(&self, x: f64, v: &[f64], vp: &[f64]) -> f64 {
        self.kernel(x, v, vp) * self.spec.eval(v)
    }

    /// `ν(x, v) = ∫ σ(x, v', v) dv'`, in closed form.
    pub fn nu(&self, x: f64, v: &[f64]) -> f64 {
        match self.profile {
            CollisionProfile::Constant => 1.0,
            CollisionProfile::Smooth { .. } => self.nu0(x),
            CollisionProfile::Blended { .. } => {
                self.nu0(x) * (1.0 + self.strength() * self.bump_factor(v) * self.bump_mass)
            }
        }
    }

    pub fn nu1d(&self, x: f64, v: f64) -> f64 {
        self.nu(x, &[v])
    }
}
