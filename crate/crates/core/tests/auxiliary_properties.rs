//! Defining equations, bounds and symmetries of the auxiliary functions and
//! the rescaled operator.

use fraclimit::auxiliary::{apply_leps, eval_chi_general, eval_chi_simple, TestFunction, TrigPolynomial};
use fraclimit::equilibria::{make_collision_model, make_heavy_tail_family, CollisionProfile};
use fraclimit::grid::{DensityField, PeriodicGrid};
use fraclimit::velocity_grid::{build_velocity_quadrature, MapKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FD_STEP: f64 = 1e-5;

fn phi() -> TrigPolynomial {
    TrigPolynomial {
        mean: 0.2,
        modes: vec![(1, 1.0, -0.3), (3, 0.25, 0.4)],
        decay: 0.0,
    }
}

fn random_velocity(rng: &mut ChaCha8Rng) -> f64 {
    // spread over several decades, both signs
    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    sign * 10f64.powf(rng.gen_range(-2.0..3.0))
}

#[test]
fn simple_auxiliary_solves_its_transport_equation() {
    let phi = phi();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let x = rng.gen_range(0.0..std::f64::consts::TAU);
        let v = random_velocity(&mut rng);
        let eps = rng.gen_range(0.01..0.5);
        let chi = |y: f64| eval_chi_simple(&phi, eps, y, v, 0.0);
        let dchi = (chi(x + FD_STEP) - chi(x - FD_STEP)) / (2.0 * FD_STEP);
        let residual = chi(x) - eps * v * dchi - phi.value(x, 0.0);
        worst = worst.max(residual.abs());
    }
    assert!(worst <= 1e-6, "worst residual {worst:e}");
}

#[test]
fn general_auxiliary_solves_its_transport_equation() {
    let spec = make_heavy_tail_family(1.0, 1).unwrap();
    let model =
        make_collision_model(CollisionProfile::Smooth { amplitude: 0.5 }, 0.5, 1.5, &spec).unwrap();
    let phi = phi();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let x = rng.gen_range(0.0..std::f64::consts::TAU);
        let v = random_velocity(&mut rng);
        let eps = rng.gen_range(0.01..0.5);
        let chi = |y: f64| eval_chi_general(&phi, &model, eps, y, v, 0.0);
        let dchi = (chi(x + FD_STEP) - chi(x - FD_STEP)) / (2.0 * FD_STEP);
        let nu = model.nu1d(x, v);
        let residual = nu * chi(x) - eps * v * dchi - nu * phi.value(x, 0.0);
        worst = worst.max(residual.abs());
    }
    assert!(worst <= 1e-5, "worst residual {worst:e}");
}

#[test]
fn sup_bounds() {
    let spec = make_heavy_tail_family(1.0, 1).unwrap();
    let model =
        make_collision_model(CollisionProfile::Smooth { amplitude: 0.5 }, 0.5, 1.5, &spec).unwrap();
    let phi = phi();
    // sup |φ| on a fine grid
    let sup = (0..4096)
        .map(|i| phi.value(i as f64 * std::f64::consts::TAU / 4096.0, 0.0).abs())
        .fold(0.0, f64::max)
        * (1.0 + 1e-6);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..500 {
        let x = rng.gen_range(0.0..std::f64::consts::TAU);
        let v = random_velocity(&mut rng);
        let eps = rng.gen_range(0.01..0.5);
        assert!(eval_chi_simple(&phi, eps, x, v, 0.0).abs() <= sup);
        let general = eval_chi_general(&phi, &model, eps, x, v, 0.0).abs();
        assert!(general <= sup * model.nu2() / model.nu1());
        // the kernel is a probability density, so the sharp bound holds too
        assert!(general <= sup);
    }
}

#[test]
fn weighted_l2_bound() {
    let spec = make_heavy_tail_family(1.0, 1).unwrap();
    let quad = build_velocity_quadrature(&spec, 128, MapKind::Auto).unwrap();
    let grid = PeriodicGrid::new(64).unwrap();
    let phi = phi();
    let eq = quad.sample_equilibrium(&spec);
    let phi_l2 = phi.sample(grid, 0.0).l2_norm();
    for &eps in &[0.5, 0.1, 0.02] {
        let mut acc = 0.0;
        for x in grid.points() {
            for j in 0..quad.len() {
                let chi = eval_chi_simple(&phi, eps, x, quad.node_component(j), 0.0);
                acc += grid.spacing() * quad.weight(j) * eq[j] * chi * chi;
            }
        }
        assert!(acc.sqrt() <= phi_l2 * (1.0 + 1e-8), "eps {eps}");
    }
}

#[test]
fn rescaled_operator_is_linear() {
    let spec = make_heavy_tail_family(1.5, 1).unwrap();
    let quad = build_velocity_quadrature(&spec, 64, MapKind::Auto).unwrap();
    let grid = PeriodicGrid::new(16).unwrap();
    let a = TrigPolynomial::cosine(1);
    let b = TrigPolynomial::sine(2);
    let (ca, cb) = (0.7, -1.3);
    let combo = TrigPolynomial {
        mean: 0.0,
        modes: vec![(1, ca, 0.0), (2, 0.0, cb)],
        decay: 0.0,
    };
    let la = apply_leps(&a, 0.1, &spec, &quad, None, grid, 0.0).unwrap();
    let lb = apply_leps(&b, 0.1, &spec, &quad, None, grid, 0.0).unwrap();
    let lc = apply_leps(&combo, 0.1, &spec, &quad, None, grid, 0.0).unwrap();
    let want = DensityField::new(
        grid,
        la.values().iter().zip(lb.values()).map(|(p, q)| ca * p + cb * q).collect(),
    )
    .unwrap();
    assert!(lc.sub(&want).sup_norm() < 1e-10);
}

#[test]
fn rescaled_operator_commutes_with_translations() {
    let spec = make_heavy_tail_family(1.0, 1).unwrap();
    let quad = build_velocity_quadrature(&spec, 64, MapKind::Auto).unwrap();
    let grid = PeriodicGrid::new(32).unwrap();
    let unit = make_collision_model(CollisionProfile::Constant, 1.0, 1.0, &spec).unwrap();
    let shift = 5;
    let h = grid.spacing();
    let base = phi();
    // φ(x - s h) as a trigonometric polynomial
    let shifted = TrigPolynomial {
        mean: base.mean,
        modes: base
            .modes
            .iter()
            .map(|&(k, a, b)| {
                let (s, c) = (k as f64 * shift as f64 * h).sin_cos();
                (k, a * c - b * s, a * s + b * c)
            })
            .collect(),
        decay: 0.0,
    };
    for model in [None, Some(&unit)] {
        let l0 = apply_leps(&base, 0.1, &spec, &quad, model, grid, 0.0).unwrap();
        let l1 = apply_leps(&shifted, 0.1, &spec, &quad, model, grid, 0.0).unwrap();
        assert!(l1.sub(&l0.roll(-(shift as isize))).sup_norm() < 1e-10);
    }
}

#[test]
fn velocity_average_of_correction_vanishes() {
    let spec = make_heavy_tail_family(1.0, 1).unwrap();
    let quad = build_velocity_quadrature(&spec, 128, MapKind::Auto).unwrap();
    let grid = PeriodicGrid::new(16).unwrap();
    let phi = TrigPolynomial::cosine(1);
    let mut last = f64::INFINITY;
    for &eps in &[0.2, 0.1, 0.05, 0.025] {
        // ∫F(χ - φ) dv = ε^α 𝓛^ε(φ)
        let avg = apply_leps(&phi, eps, &spec, &quad, None, grid, 0.0).unwrap().scale(eps);
        let size = avg.sup_norm();
        assert!(size < last);
        last = size;
    }
    assert!(last < 0.03);
}
