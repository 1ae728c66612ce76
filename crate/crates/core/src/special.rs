//! Quadrature rules and special functions shared by the operators.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (t, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (
        t.iter().map(|&t| mid + half * t).collect(),
        w.iter().map(|&w| half * w).collect(),
    )
}

/// Gauss–Laguerre nodes and weights for `∫_0^∞ e^{-z} g(z) dz`.
pub fn gauss_laguerre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss-Laguerre rule needs at least one node");
    let nf = n as f64;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let mut z = 0.0;
    for i in 0..n {
        // initial guesses (Stroud & Secrest)
        if i == 0 {
            z = 3.0 / (1.0 + 2.4 * nf);
        } else if i == 1 {
            z += 15.0 / (1.0 + 2.5 * nf);
        } else {
            let ai = (i - 1) as f64;
            z += (1.0 + 2.55 * ai) / (1.9 * ai) * (z - nodes[i - 2]);
        }
        let laguerre = |z: f64| {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let jf = j as f64;
                let p3 = p2;
                p2 = p1;
                p1 = ((2.0 * jf + 1.0 - z) * p2 - jf * p3) / (jf + 1.0);
            }
            (p1, p2, (nf * p1 - nf * p2) / z)
        };
        for _ in 0..200 {
            let (p1, _, pp) = laguerre(z);
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        let (_, p2, pp) = laguerre(z);
        nodes[i] = z;
        weights[i] = (1.0 / (pp * nf * p2)).abs();
    }
    // rescale to the exact zero moment; removes recurrence drift in the weights
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    (nodes, weights)
}

/// Γ(x) for real x (Lanczos approximation from `statrs`).
pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

const BERNOULLI_EVEN: [f64; 8] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
];

/// Hurwitz zeta `ζ(s, a) = Σ_{j≥0} (a + j)^{-s}`, analytically continued in
/// `s` (any `s ≠ 1` with `s > -12`), `a > 0`.
///
/// Euler–Maclaurin summation after shifting the argument by a fixed number of
/// explicit terms.
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    assert!(a > 0.0, "Hurwitz zeta needs a > 0");
    assert!((s - 1.0).abs() > 1e-12, "zeta pole at s = 1");
    let shift = 24usize;
    let mut sum = 0.0;
    for j in 0..shift {
        sum += (a + j as f64).powf(-s);
    }
    let b = a + shift as f64;
    sum += b.powf(1.0 - s) / (s - 1.0) + 0.5 * b.powf(-s);
    // rising factorial s (s+1) ... (s+2k-2) / (2k)!
    let mut coeff = s;
    let mut fact = 2.0;
    let mut power = b.powf(-s - 1.0);
    for (k, bern) in BERNOULLI_EVEN.iter().enumerate() {
        sum += bern / fact * coeff * power;
        let k2 = 2.0 * (k as f64 + 1.0);
        coeff *= (s + k2 - 1.0) * (s + k2);
        fact *= (k2 + 1.0) * (k2 + 2.0);
        power /= b * b;
    }
    sum
}

/// Riemann zeta function for real `s ≠ 1`, `s > -12`.
pub fn riemann_zeta(s: f64) -> f64 {
    if s < 0.0 {
        // reflection keeps the summation away from growing terms
        2f64.powf(s) * PI.powf(s - 1.0) * (0.5 * PI * s).sin() * gamma(1.0 - s)
            * hurwitz_zeta(1.0 - s, 1.0)
    } else {
        hurwitz_zeta(s, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn legendre_integrates_polynomials() {
        for n in [1usize, 2, 7, 16, 64, 256] {
            let (x, w) = gauss_legendre(n);
            let total: f64 = w.iter().sum();
            assert_abs_diff_eq!(total, 2.0, epsilon = 1e-13);
            let deg = (2 * n - 1).min(40) as i32;
            let moment: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg - deg % 2)).sum();
            assert_abs_diff_eq!(moment, 2.0 / ((deg - deg % 2) as f64 + 1.0), epsilon = 1e-12);
            for i in 0..n {
                assert_eq!(x[i], -x[n - 1 - i]);
            }
        }
    }

    #[test]
    fn laguerre_moments_are_factorials() {
        let (z, w) = gauss_laguerre(64);
        let total: f64 = w.iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-14);
        let m5: f64 = z.iter().zip(&w).map(|(z, w)| w * z.powi(5)).sum();
        assert_abs_diff_eq!(m5, 120.0, epsilon = 1e-9);
        // ∫ e^{-z} cos(z) dz = 1/2
        let c: f64 = z.iter().zip(&w).map(|(z, w)| w * z.cos()).sum();
        assert_abs_diff_eq!(c, 0.5, epsilon = 1e-13);
    }

    #[test]
    fn zeta_known_values() {
        assert_abs_diff_eq!(riemann_zeta(2.0), PI * PI / 6.0, epsilon = 1e-14);
        assert_abs_diff_eq!(riemann_zeta(0.0), -0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(riemann_zeta(-1.0), -1.0 / 12.0, epsilon = 1e-14);
        assert_abs_diff_eq!(riemann_zeta(-2.0), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(riemann_zeta(0.5), -1.460_354_508_809_586_8, epsilon = 1e-13);
        assert_abs_diff_eq!(riemann_zeta(-1.5), -0.025_485_201_889_833_035, epsilon = 1e-13);
    }

    #[test]
    fn hurwitz_tail_matches_direct_sum() {
        let s = 1.5;
        let a = 3.25;
        let direct: f64 = (0..2_000_000).map(|j| (a + j as f64).powf(-s)).sum::<f64>()
            + 2.0 * (a + 2_000_000.0f64).powf(1.0 - s) / (s - 1.0) * 0.5;
        assert_abs_diff_eq!(hurwitz_zeta(s, a), direct, epsilon = 1e-9);
    }

    #[test]
    fn gamma_values() {
        assert_abs_diff_eq!(gamma(2.0), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(gamma(0.5), PI.sqrt(), epsilon = 1e-13);
    }
}
