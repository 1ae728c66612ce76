//! Spectral solver for `ε^α ∂_t f + ε v ∂_x f = L(f)` on the torus.
//!
//! `f` is stored as Fourier coefficients in `x` at every velocity node.
//! Time stepping is Strang splitting: the transport half-steps are exact
//! phase rotations of each mode, the collision step is either the exact
//! relaxation of the simple operator or backward Euler with the dense
//! per-point collision matrix of a general model. Fast particles may wrap
//! around the torus many times per step; the exact phase makes this harmless.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::collision::{discrete_equilibrium, CollisionMatrix};
use crate::equilibria::{CollisionModel, EquilibriumSpec};
use crate::error::{Error, Result};
use crate::grid::{DensityField, PeriodicGrid};
use crate::velocity_grid::VelocityQuadrature;

/// Default time step `min(cap, factor · ε^α)`.
pub fn default_dt(epsilon: f64, alpha: f64, cap: f64, factor: f64) -> f64 {
    cap.min(factor * epsilon.powf(alpha))
}

#[derive(Debug, Clone)]
pub enum CollisionOperator {
    /// `L(f) = ⟨f⟩F - f`.
    Simple,
    General(Arc<CollisionModel>),
}

/// Distribution `f̂(k, v_j, t)` plus scaling parameters.
#[derive(Debug, Clone)]
pub struct PhaseSpaceState {
    grid: PeriodicGrid,
    quad: Arc<VelocityQuadrature>,
    spec: EquilibriumSpec,
    equilibrium: Vec<f64>,
    /// velocity-major: `coeffs[j * n_x + slot]`
    coeffs: Vec<Complex64>,
    band_limit: usize,
    epsilon: f64,
    time: f64,
    g_accum_sq: f64,
}

/// Well-prepared data `f_0 = ρ_0(x) F(v)`.
pub fn init_state(
    rho0: &DensityField,
    spec: &EquilibriumSpec,
    quad: Arc<VelocityQuadrature>,
    epsilon: f64,
    band_limit: usize,
) -> Result<PhaseSpaceState> {
    if spec.dim() != 1 || quad.dim() != 1 {
        return Err(Error::Domain("the kinetic solver works in one dimension".into()));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::Domain(format!("epsilon must lie in (0, 1], got {epsilon}")));
    }
    if let Some(v) = rho0.values().iter().find(|v| **v < 0.0) {
        return Err(Error::Domain(format!("initial density is negative ({v})")));
    }
    let grid = rho0.grid();
    if band_limit == 0 || band_limit > grid.len() / 2 {
        return Err(Error::Domain(format!(
            "band limit K = {band_limit} must lie in 1..={}",
            grid.len() / 2
        )));
    }
    let equilibrium = discrete_equilibrium(&quad, spec);
    let rho_hat = rho0.spectrum();
    let nx = grid.len();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); nx * quad.len()];
    for (j, e) in equilibrium.iter().enumerate() {
        for (slot, r) in rho_hat.iter().enumerate() {
            coeffs[j * nx + slot] = r * *e;
        }
    }
    let mut state = PhaseSpaceState {
        grid,
        quad,
        spec: *spec,
        equilibrium,
        coeffs,
        band_limit,
        epsilon,
        time: 0.0,
        g_accum_sq: 0.0,
    };
    state.truncate_band();
    Ok(state)
}

/// ρ, the accumulated `L²(0,t; L²_{F^{-1}})` norm of `g = f - ρF`, and the
/// instantaneous norms.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub rho: DensityField,
    pub g_norm: f64,
    pub g_norm_instant: f64,
    pub f_norm: f64,
}

impl PhaseSpaceState {
    pub fn grid(&self) -> PeriodicGrid {
        self.grid
    }

    pub fn quadrature(&self) -> &VelocityQuadrature {
        &self.quad
    }

    pub fn spec(&self) -> &EquilibriumSpec {
        &self.spec
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn alpha(&self) -> f64 {
        self.spec.alpha()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn coefficient(&self, k: i64, j: usize) -> Complex64 {
        self.coeffs[j * self.grid.len() + self.grid.slot(k)]
    }

    fn nv(&self) -> usize {
        self.quad.len()
    }

    fn truncate_band(&mut self) {
        let nx = self.grid.len();
        let grid = self.grid;
        let kmax = self.band_limit as i64;
        for slot in 0..nx {
            let k = grid.wavenumber(slot);
            if slot == grid.nyquist() || k.abs() > kmax {
                for j in 0..self.quad.len() {
                    self.coeffs[j * nx + slot] = Complex64::new(0.0, 0.0);
                }
            }
        }
    }

    /// Density modes `ρ̂_k = Σ_j w_j f̂(k, v_j)`.
    pub fn density_spectrum(&self) -> Vec<Complex64> {
        let nx = self.grid.len();
        let mut rho = vec![Complex64::new(0.0, 0.0); nx];
        for (j, w) in self.quad.weights().iter().enumerate() {
            for slot in 0..nx {
                rho[slot] += self.coeffs[j * nx + slot] * *w;
            }
        }
        rho
    }

    pub fn density(&self) -> DensityField {
        DensityField::from_spectrum(self.grid, &self.density_spectrum())
            .expect("spectrum matches grid")
    }

    /// `∫∫ f dx dv`.
    pub fn mass(&self) -> f64 {
        2.0 * PI * self.density_spectrum()[0].re
    }

    /// `(∫∫ f² / F dx dv)^{1/2}`.
    pub fn f_norm(&self) -> f64 {
        let nx = self.grid.len();
        let mut acc = 0.0;
        for j in 0..self.nv() {
            let scale = self.quad.weight(j) / self.equilibrium[j];
            let s: f64 = self.coeffs[j * nx..(j + 1) * nx].iter().map(|c| c.norm_sqr()).sum();
            acc += scale * s;
        }
        (2.0 * PI * acc).sqrt()
    }

    /// `(∫∫ g² / F dx dv)^{1/2}` at the current time.
    pub fn g_norm_instant(&self) -> f64 {
        let nx = self.grid.len();
        let rho = self.density_spectrum();
        let mut acc = 0.0;
        for j in 0..self.nv() {
            let e = self.equilibrium[j];
            let scale = self.quad.weight(j) / e;
            let s: f64 = self.coeffs[j * nx..(j + 1) * nx]
                .iter()
                .zip(&rho)
                .map(|(c, r)| (c - r * e).norm_sqr())
                .sum();
            acc += scale * s;
        }
        (2.0 * PI * acc).sqrt()
    }

    /// Largest violation of `f̂(-k) = conj f̂(k)`.
    pub fn reality_defect(&self) -> f64 {
        let nx = self.grid.len();
        let mut worst: f64 = 0.0;
        for j in 0..self.nv() {
            for slot in 0..nx {
                let mirror = (nx - slot) % nx;
                let d = self.coeffs[j * nx + slot] - self.coeffs[j * nx + mirror].conj();
                worst = worst.max(d.norm());
            }
        }
        worst
    }

    pub fn decompose(&self) -> Decomposition {
        Decomposition {
            rho: self.density(),
            g_norm: self.g_accum_sq.sqrt(),
            g_norm_instant: self.g_norm_instant(),
            f_norm: self.f_norm(),
        }
    }

    /// Physical-space values `f(x_i, v_j)`, velocity-major.
    pub fn physical(&self) -> Vec<f64> {
        let nx = self.grid.len();
        let fft = FftPlanner::new().plan_fft_inverse(nx);
        let mut buf = self.coeffs.clone();
        for chunk in buf.chunks_mut(nx) {
            fft.process(chunk);
        }
        buf.into_iter().map(|c| c.re).collect()
    }
}

enum CollisionStep {
    Relax { decay: f64 },
    Implicit { inverses: Vec<DMatrix<f64>> },
}

/// Precomputed Strang stepper for a fixed `dt`.
pub struct KineticSolver {
    dt: f64,
    half_phase: Vec<Complex64>,
    collision: CollisionStep,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for KineticSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KineticSolver").field("dt", &self.dt).finish()
    }
}

impl KineticSolver {
    pub fn new(state: &PhaseSpaceState, operator: &CollisionOperator, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Domain(format!("time step must be positive, got {dt}")));
        }
        let nx = state.grid.len();
        let nv = state.nv();
        let theta = state.epsilon.powf(state.alpha());
        let speed = state.epsilon / theta;
        let mut half_phase = vec![Complex64::new(0.0, 0.0); nx * nv];
        for j in 0..nv {
            let v = state.quad.node_component(j);
            for slot in 0..nx {
                let k = state.grid.wavenumber(slot) as f64;
                half_phase[j * nx + slot] = Complex64::from_polar(1.0, -k * v * speed * 0.5 * dt);
            }
        }
        let tau = dt / theta;
        let collision = match operator {
            CollisionOperator::Simple => CollisionStep::Relax {
                decay: (-tau).exp(),
            },
            CollisionOperator::General(model) => {
                if model.spec() != &state.spec {
                    return Err(Error::Domain(
                        "collision model and state use different equilibria".into(),
                    ));
                }
                let points = state.grid.points();
                let inverses = points
                    .par_iter()
                    .map(|&x| {
                        let l = CollisionMatrix::assemble(model, &state.quad, x);
                        let a = DMatrix::<f64>::identity(nv, nv) - l.matrix() * tau;
                        let mut inv = a.try_inverse().ok_or_else(|| {
                            Error::Construction(format!("implicit collision matrix singular at x = {x}"))
                        })?;
                        // restore Σ_j w_j inv_jl = w_l, lost to round-off in the factorization
                        let w = state.quad.weights();
                        for l in 0..nv {
                            let moment: f64 = (0..nv).map(|j| w[j] * inv[(j, l)]).sum();
                            let defect = w[l] - moment;
                            for j in 0..nv {
                                inv[(j, l)] += defect * state.equilibrium[j];
                            }
                        }
                        Ok(inv)
                    })
                    .collect::<Result<Vec<_>>>()?;
                CollisionStep::Implicit { inverses }
            }
        };
        let mut planner = FftPlanner::new();
        Ok(Self {
            dt,
            half_phase,
            collision,
            forward: planner.plan_fft_forward(nx),
            inverse: planner.plan_fft_inverse(nx),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn transport_half(&self, state: &mut PhaseSpaceState) {
        state
            .coeffs
            .par_iter_mut()
            .zip(self.half_phase.par_iter())
            .for_each(|(c, p)| *c *= p);
    }

    fn collide(&self, state: &mut PhaseSpaceState) {
        let nx = state.grid.len();
        let nv = state.nv();
        match &self.collision {
            CollisionStep::Relax { decay } => {
                let rho = state.density_spectrum();
                let eq = &state.equilibrium;
                state
                    .coeffs
                    .par_chunks_mut(nx)
                    .enumerate()
                    .for_each(|(j, chunk)| {
                        for (c, r) in chunk.iter_mut().zip(&rho) {
                            let relaxed = r * eq[j];
                            *c = relaxed + (*c - relaxed) * *decay;
                        }
                    });
            }
            CollisionStep::Implicit { inverses } => {
                let mut buf = state.coeffs.clone();
                buf.par_chunks_mut(nx).for_each(|chunk| self.inverse.process(chunk));
                let phys: Vec<f64> = buf.iter().map(|c| c.re).collect();
                let updated: Vec<Vec<f64>> = (0..nx)
                    .into_par_iter()
                    .map(|i| {
                        let inv = &inverses[i];
                        let mut out = vec![0.0; nv];
                        for l in 0..nv {
                            let f = phys[l * nx + i];
                            let col = inv.column(l);
                            for (o, m) in out.iter_mut().zip(col.iter()) {
                                *o += m * f;
                            }
                        }
                        out
                    })
                    .collect();
                for (i, column) in updated.iter().enumerate() {
                    for (j, v) in column.iter().enumerate() {
                        buf[j * nx + i] = Complex64::new(*v, 0.0);
                    }
                }
                let scale = 1.0 / nx as f64;
                buf.par_chunks_mut(nx).for_each(|chunk| {
                    self.forward.process(chunk);
                    chunk.iter_mut().for_each(|c| *c *= scale);
                });
                state.coeffs = buf;
                state.truncate_band();
            }
        }
    }

    /// One Strang step: half transport, collision, half transport.
    pub fn step(&self, state: &mut PhaseSpaceState) {
        self.transport_half(state);
        self.collide(state);
        self.transport_half(state);
        state.time += self.dt;
        let g = state.g_norm_instant();
        state.g_accum_sq += self.dt * g * g;
    }
}

/// Advance a copy of `state` by one step of size `dt`.
pub fn step(state: &PhaseSpaceState, operator: &CollisionOperator, dt: f64) -> Result<PhaseSpaceState> {
    let solver = KineticSolver::new(state, operator, dt)?;
    let mut next = state.clone();
    solver.step(&mut next);
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MonitorRow {
    pub t: f64,
    pub mass: f64,
    pub f_norm: f64,
    pub g_norm_accum: f64,
    pub rho_l2: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<(f64, DensityField)>,
    pub monitors: Vec<MonitorRow>,
    pub final_state: PhaseSpaceState,
}

impl Trajectory {
    pub fn final_density(&self) -> &DensityField {
        &self.snapshots.last().expect("at least the initial snapshot").1
    }

    /// Largest `|mass(t) - mass(0)| / mass(0)`.
    pub fn mass_drift(&self) -> f64 {
        let m0 = self.monitors[0].mass;
        self.monitors
            .iter()
            .map(|r| (r.mass - m0).abs() / m0.abs().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }

    /// Largest step-to-step increase of `f_norm` relative to `f_norm(0)`.
    pub fn worst_norm_increase(&self) -> f64 {
        let f0 = self.monitors[0].f_norm;
        self.monitors
            .windows(2)
            .map(|w| (w[1].f_norm - w[0].f_norm) / f0)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn monitor(state: &PhaseSpaceState) -> MonitorRow {
    let d = state.decompose();
    MonitorRow {
        t: state.time,
        mass: state.mass(),
        f_norm: d.f_norm,
        g_norm_accum: d.g_norm,
        rho_l2: d.rho.l2_norm(),
    }
}

/// Integrate to time `t_final` with steps no larger than `dt`, snapshotting
/// every `snapshot_every` steps and at the end.
pub fn solve(
    state: PhaseSpaceState,
    operator: &CollisionOperator,
    t_final: f64,
    dt: f64,
    snapshot_every: usize,
) -> Result<Trajectory> {
    if !(t_final > 0.0) {
        return Err(Error::Domain(format!("final time must be positive, got {t_final}")));
    }
    let steps = (t_final / dt - 1e-9).ceil().max(1.0) as usize;
    let dt = t_final / steps as f64;
    let solver = KineticSolver::new(&state, operator, dt)?;
    let mut state = state;
    let first = monitor(&state);
    let limit = 10.0 * first.f_norm.max(1e-300);
    let mut monitors = vec![first];
    let mut snapshots = vec![(state.time, state.density())];
    let every = snapshot_every.max(1);
    for n in 1..=steps {
        solver.step(&mut state);
        let row = monitor(&state);
        if !(row.f_norm.is_finite() && row.mass.is_finite()) || row.f_norm > limit {
            return Err(Error::Diverged {
                time: state.time,
                diagnostic: format!("f_norm = {}, mass = {}", row.f_norm, row.mass),
            });
        }
        monitors.push(row);
        if n % every == 0 || n == steps {
            snapshots.push((state.time, state.density()));
        }
    }
    Ok(Trajectory {
        snapshots,
        monitors,
        final_state: state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::{make_collision_model, make_heavy_tail_family, CollisionProfile};
    use crate::velocity_grid::{build_velocity_quadrature, MapKind};

    fn setup(nv: usize) -> (EquilibriumSpec, Arc<VelocityQuadrature>, PeriodicGrid) {
        let spec = make_heavy_tail_family(1.0, 1).unwrap();
        let quad = Arc::new(build_velocity_quadrature(&spec, nv, MapKind::Auto).unwrap());
        (spec, quad, PeriodicGrid::new(16).unwrap())
    }

    #[test]
    fn constant_data_is_stationary() {
        let (spec, quad, grid) = setup(32);
        let rho0 = DensityField::constant(grid, 1.0);
        let s0 = init_state(&rho0, &spec, quad, 0.1, 8).unwrap();
        for j in 0..s0.quadrature().len() {
            assert!(s0.coefficient(1, j).norm() == 0.0);
        }
        let s1 = step(&s0, &CollisionOperator::Simple, 0.37).unwrap();
        for j in 0..s0.quadrature().len() {
            assert!((s1.coefficient(0, j) - s0.coefficient(0, j)).norm() < 1e-15);
        }
    }

    #[test]
    fn cosine_data_occupies_three_modes() {
        let (spec, quad, grid) = setup(32);
        let rho0 = DensityField::from_fn(grid, |x| 1.0 + 0.5 * x.cos());
        let s = init_state(&rho0, &spec, quad, 0.1, 8).unwrap();
        assert!((s.mass() - 2.0 * PI).abs() < 1e-13);
        for slot in 0..grid.len() {
            let k = grid.wavenumber(slot);
            let total: f64 = (0..s.quadrature().len()).map(|j| s.coefficient(k, j).norm()).sum();
            assert_eq!(total > 1e-14, k.abs() <= 1, "k = {k}");
        }
    }

    #[test]
    fn negative_density_rejected() {
        let (spec, quad, grid) = setup(32);
        let rho0 = DensityField::from_fn(grid, |x| x.cos());
        assert!(init_state(&rho0, &spec, quad, 0.1, 8).is_err());
    }

    #[test]
    fn half_step_phase() {
        let (spec, quad, grid) = setup(32);
        let rho0 = DensityField::constant(grid, 1.0);
        let s = init_state(&rho0, &spec, quad, 0.5, 8).unwrap();
        let solver = KineticSolver::new(&s, &CollisionOperator::Simple, 0.2).unwrap();
        // mode k = 1, velocity 1: exp(-i k v ε dt/(2 ε^α)) with dt/2 = 0.1
        let nx = grid.len();
        let j = (0..s.quadrature().len())
            .min_by(|a, b| {
                (s.quadrature().node_component(*a) - 1.0)
                    .abs()
                    .total_cmp(&(s.quadrature().node_component(*b) - 1.0).abs())
            })
            .unwrap();
        let v = s.quadrature().node_component(j);
        let expected = Complex64::from_polar(1.0, -v * 0.1);
        assert!((solver.half_phase[j * nx + 1] - expected).norm() < 1e-15);
        let unit = Complex64::from_polar(1.0, -0.1);
        assert!((unit - Complex64::new(0.1f64.cos(), -0.1f64.sin())).norm() < 1e-16);
    }

    #[test]
    fn infinite_relaxation_projects_on_kernel() {
        let (spec, quad, grid) = setup(32);
        let rho0 = DensityField::from_fn(grid, |x| 1.0 + 0.5 * x.cos());
        let mut s = init_state(&rho0, &spec, quad, 0.5, 8).unwrap();
        // scramble by a transport-only advance
        let solver = KineticSolver::new(&s, &CollisionOperator::Simple, 0.3).unwrap();
        solver.transport_half(&mut s);
        let relax = KineticSolver::new(&s, &CollisionOperator::Simple, 1e6).unwrap();
        let rho = s.density_spectrum();
        relax.collide(&mut s);
        for j in 0..s.quadrature().len() {
            for k in -1..=1i64 {
                let expected = rho[grid.slot(k)] * s.equilibrium[j];
                assert!((s.coefficient(k, j) - expected).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn general_operator_conserves_mass_and_dissipates() {
        let (spec, quad, grid) = setup(32);
        let model = Arc::new(
            make_collision_model(CollisionProfile::Smooth { amplitude: 0.5 }, 0.5, 1.5, &spec)
                .unwrap(),
        );
        let rho0 = DensityField::from_fn(grid, |x| 1.0 + 0.5 * x.cos());
        let s = init_state(&rho0, &spec, quad, 0.2, 8).unwrap();
        let traj = solve(s, &CollisionOperator::General(model), 0.5, 0.01, 10).unwrap();
        assert!(traj.mass_drift() < 1e-12, "{}", traj.mass_drift());
        assert!(traj.worst_norm_increase() <= 1e-14);
        assert!(traj.final_state.reality_defect() < 1e-12);
    }
}
