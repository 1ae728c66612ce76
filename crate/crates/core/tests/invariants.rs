//! Randomized invariants of the building blocks.

use std::sync::OnceLock;

use fraclimit::collision::{
    apply_collision_general, apply_collision_simple, dirichlet_form, entropy_production,
    VelocitySlice,
};
use fraclimit::equilibria::{
    make_collision_model, make_heavy_tail_family, CollisionModel, CollisionProfile,
    EquilibriumSpec,
};
use fraclimit::fractional::{frac_laplacian_multiplier, PvOperator};
use fraclimit::grid::{DensityField, PeriodicGrid};
use fraclimit::harness::empirical_order;
use fraclimit::velocity_grid::{build_velocity_quadrature, MapKind, VelocityQuadrature};
use proptest::prelude::*;

struct Fixture {
    spec: EquilibriumSpec,
    quad: VelocityQuadrature,
    model: CollisionModel,
}

fn fixture() -> &'static Fixture {
    static CELL: OnceLock<Fixture> = OnceLock::new();
    CELL.get_or_init(|| {
        let spec = make_heavy_tail_family(1.3, 1).unwrap();
        let quad = build_velocity_quadrature(&spec, 48, MapKind::Auto).unwrap();
        let model =
            make_collision_model(CollisionProfile::Smooth { amplitude: 0.5 }, 0.5, 1.5, &spec)
                .unwrap();
        Fixture { spec, quad, model }
    })
}

fn pv(alpha_idx: usize) -> &'static PvOperator {
    static CELL: OnceLock<Vec<PvOperator>> = OnceLock::new();
    &CELL.get_or_init(|| {
        let grid = PeriodicGrid::new(32).unwrap();
        [0.5, 1.0, 1.5]
            .iter()
            .map(|&a| PvOperator::new(grid, a, 16, 1.0).unwrap())
            .collect()
    })[alpha_idx]
}

/// Slices of the form `F(v) p(v)` with `p` a bounded random perturbation.
fn slice_values(fix: &Fixture, coeffs: &[f64]) -> Vec<f64> {
    let eq = fraclimit::collision::discrete_equilibrium(&fix.quad, &fix.spec);
    (0..fix.quad.len())
        .map(|j| {
            let v = fix.quad.node_component(j);
            let s = v.atan();
            let p: f64 = coeffs.iter().enumerate().map(|(i, c)| c * (i as f64 * s).cos()).sum();
            eq[j] * p
        })
        .collect()
}

fn field(grid: PeriodicGrid, values: &[f64]) -> DensityField {
    DensityField::new(grid, values.to_vec()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn collisions_conserve_mass_and_dissipate(
        coeffs in prop::collection::vec(-1.0f64..1.0, 5),
        x in 0.0f64..std::f64::consts::TAU,
    ) {
        let fix = fixture();
        let f = VelocitySlice::new(slice_values(fix, &coeffs), &fix.quad, &fix.spec);
        let scale = f.weighted_norm_sq().max(1.0);

        let simple = apply_collision_simple(&f);
        prop_assert!(simple.density().abs() < 1e-12 * scale.sqrt());
        prop_assert!(entropy_production(&simple, &f) <= 1e-12 * scale);

        let general = apply_collision_general(&fix.model, x, &f);
        prop_assert!(general.density().abs() < 1e-10 * scale.sqrt());
        let production = entropy_production(&general, &f);
        prop_assert!(production <= 1e-12 * scale);
        let form = dirichlet_form(&fix.model, x, &f);
        prop_assert!((production - form).abs() <= 1e-8 * scale);
    }

    #[test]
    fn fractional_operators_are_linear(
        a in prop::collection::vec(-1.0f64..1.0, 32),
        b in prop::collection::vec(-1.0f64..1.0, 32),
        ca in -2.0f64..2.0,
        cb in -2.0f64..2.0,
        alpha_idx in 0usize..3,
    ) {
        let grid = PeriodicGrid::new(32).unwrap();
        let alpha = [0.5, 1.0, 1.5][alpha_idx];
        let combo: Vec<f64> = a.iter().zip(&b).map(|(p, q)| ca * p + cb * q).collect();
        let (fa, fb, fc) = (field(grid, &a), field(grid, &b), field(grid, &combo));
        let blend = |x: &DensityField, y: &DensityField| {
            field(grid, &x.values().iter().zip(y.values()).map(|(p, q)| ca * p + cb * q).collect::<Vec<_>>())
        };

        let m = |r: &DensityField| frac_laplacian_multiplier(r, alpha);
        let lhs = m(&fc);
        let rhs = blend(&m(&fa), &m(&fb));
        prop_assert!(lhs.sub(&rhs).sup_norm() <= 1e-10 * (1.0 + rhs.sup_norm()));

        let op = pv(alpha_idx);
        let lhs = op.apply(&fc).unwrap();
        let rhs = blend(&op.apply(&fa).unwrap(), &op.apply(&fb).unwrap());
        prop_assert!(lhs.sub(&rhs).sup_norm() <= 1e-10 * (1.0 + rhs.sup_norm()));
    }

    #[test]
    fn multiplier_annihilates_constants_and_preserves_mean(
        values in prop::collection::vec(-1.0f64..1.0, 32),
        c in -5.0f64..5.0,
        alpha in 0.2f64..1.9,
    ) {
        let grid = PeriodicGrid::new(32).unwrap();
        let r = field(grid, &values);
        prop_assert!(frac_laplacian_multiplier(&DensityField::constant(grid, c), alpha).sup_norm() < 1e-12);
        prop_assert!(frac_laplacian_multiplier(&r, alpha).mass().abs() < 1e-10);
    }

    #[test]
    fn empirical_order_recovers_power_laws(
        p in 0.2f64..2.5,
        c in 1e-3f64..1e2,
    ) {
        let eps = [0.2f64, 0.1, 0.05, 0.025];
        let errors: Vec<f64> = eps.iter().map(|e| c * e.powf(p)).collect();
        let fit = empirical_order(&errors, &eps).unwrap();
        prop_assert!((fit.slope - p).abs() < 1e-10);
        prop_assert!(fit.residual < 1e-10);
    }

    #[test]
    fn spectrum_round_trip(values in prop::collection::vec(-10.0f64..10.0, 64)) {
        let grid = PeriodicGrid::new(64).unwrap();
        let r = field(grid, &values);
        let back = DensityField::from_spectrum(grid, &r.spectrum()).unwrap();
        prop_assert!(back.sub(&r).sup_norm() < 1e-12);
    }
}
