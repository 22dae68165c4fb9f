#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use string_lab::Grid;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Coefficients c_0..c_deg, each uniform in [-1, 1].
pub fn random_poly(rng: &mut ChaCha8Rng, deg: usize) -> Vec<f64> {
    (0..=deg).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn eval(p: &[f64], s: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, c| acc * s + c)
}

pub fn deriv(p: &[f64]) -> Vec<f64> {
    if p.len() <= 1 {
        return vec![0.0];
    }
    p.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect()
}

pub fn deriv_n(p: &[f64], n: usize) -> Vec<f64> {
    (0..n).fold(p.to_vec(), |q, _| deriv(&q))
}

pub fn mul(p: &[f64], q: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; p.len() + q.len() - 1];
    for (i, a) in p.iter().enumerate() {
        for (j, b) in q.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    out
}

/// ∫_0^1 s^alpha p(s)^2 ds, exact.
pub fn weighted_l2_sq(p: &[f64], alpha: usize) -> f64 {
    mul(p, p).iter().enumerate().map(|(k, c)| c / (k + alpha + 1) as f64).sum()
}

/// ‖p‖²_{X^m} straight from the two-case definition.
pub fn xm_sq_exact(p: &[f64], m: usize) -> f64 {
    let k = m / 2;
    let mut sum: f64 = (0..=k).map(|i| weighted_l2_sq(&deriv_n(p, i), 0)).sum();
    if m % 2 == 0 {
        for j in 1..=k {
            sum += weighted_l2_sq(&deriv_n(p, k + j), 2 * j);
        }
    } else {
        for j in 1..=k + 1 {
            sum += weighted_l2_sq(&deriv_n(p, k + j), 2 * j - 1);
        }
    }
    sum
}

pub fn sample(p: &[f64], grid: &Grid) -> Vec<f64> {
    grid.sample(|s| eval(p, s))
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Hanging string bent by random mode amplitudes, with a random velocity pinned at s = 1.
pub fn random_hanging(rng: &mut ChaCha8Rng, grid: &Grid) -> (Vec<string_lab::Vec3>, Vec<string_lab::Vec3>) {
    use string_lab::scenarios::{hanging_perturbed, mode_frequency_exact};
    use string_lab::Vec3;
    let modes: Vec<(f64, f64)> = (1..=3)
        .map(|k| {
            let w = mode_frequency_exact(k);
            (w, rng.random_range(-0.15..0.15) / (w * w))
        })
        .collect();
    let x0 = hanging_perturbed(grid, &modes).x;
    let c: Vec<Vec3> = (0..3)
        .map(|_| Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let x1 = grid.sample(|s| (c[0] + c[1] * s + c[2] * (s * s)) * (1.0 - s));
    (x0, x1)
}

/// Smooth unit tangent u0 and orthogonal u1, both analytic in s.
pub fn generic_tangents(grid: &Grid) -> (Vec<string_lab::Vec3>, Vec<string_lab::Vec3>) {
    use string_lab::Vec3;
    let u0: Vec<Vec3> = grid.sample(|s| {
        let a = 0.3 * (2.0 * s).sin() + 0.2;
        let b = 0.5 * s * s;
        Vec3::new(a.sin() * b.cos(), a.sin() * b.sin(), a.cos())
    });
    let u1 = u0
        .iter()
        .enumerate()
        .map(|(i, u)| {
            let s = grid.node(i);
            let w = Vec3::new(0.2 * (3.0 * s).cos(), 0.1 + 0.3 * s, -0.1 * s);
            w - u * u.dot(&w)
        })
        .collect();
    (u0, u1)
}

pub fn random_unit(rng: &mut ChaCha8Rng) -> string_lab::Vec3 {
    loop {
        let v = string_lab::Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Rotating data (g = 0, ω = 1) with both cell tangents bent by amplitude·ψ_1^{0.2}
/// along random directions. Returns (x0, x1, X^m ⊕ X^{m−1} size of the perturbation).
pub fn perturbed_rotation(
    rng: &mut ChaCha8Rng,
    grid: &Grid,
    amplitude: f64,
    m: usize,
) -> (Vec<string_lab::Vec3>, Vec<string_lab::Vec3>, f64) {
    use string_lab::grid::integrate_edges;
    use string_lab::norms::xm_norm;
    use string_lab::prep::cutoff_psi;
    use string_lab::scenarios::rotating;
    let base = rotating(grid, 1.0, 0.0);
    let psi = cutoff_psi(1, 0.2, &grid.midpoints()).unwrap();
    let (r0, r1) = (random_unit(rng), random_unit(rng));
    let e0: Vec<_> = psi.iter().map(|p| string_lab::Vec3::new(1.0, 0.0, 0.0) + r0 * (amplitude * p)).collect();
    let e1: Vec<_> = psi.iter().map(|p| string_lab::Vec3::new(0.0, 1.0, 0.0) + r1 * (amplitude * p)).collect();
    let x0 = integrate_edges(&e0, grid);
    let x1 = integrate_edges(&e1, grid);
    let d0: Vec<_> = x0.iter().zip(&base.x).map(|(a, b)| a - b).collect();
    let d1: Vec<_> = x1.iter().zip(&base.v).map(|(a, b)| a - b).collect();
    let size = xm_norm(&d0, m, grid).unwrap() + xm_norm(&d1, m - 1, grid).unwrap();
    (x0, x1, size)
}

/// ω with y(1) = 0 for −(s y')' = ω² y, regular at s = 0, by RK4 shooting and bisection.
pub fn shooting_frequency(lo: f64, hi: f64) -> f64 {
    let end = |w: f64| -> f64 {
        let w2 = w * w;
        // series start y = 1 − w²s + w⁴s²/4 avoids the singular point
        let s0 = 1e-6;
        let (mut s, mut y, mut p) = (s0, 1.0 - w2 * s0, -w2 + 0.5 * w2 * w2 * s0);
        let steps = 200_000;
        let h = (1.0 - s0) / steps as f64;
        let f = |s: f64, y: f64, p: f64| (p, -(p + w2 * y) / s);
        for _ in 0..steps {
            let k1 = f(s, y, p);
            let k2 = f(s + h / 2.0, y + h / 2.0 * k1.0, p + h / 2.0 * k1.1);
            let k3 = f(s + h / 2.0, y + h / 2.0 * k2.0, p + h / 2.0 * k2.1);
            let k4 = f(s + h, y + h * k3.0, p + h * k3.1);
            y += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            p += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
            s += h;
        }
        y
    };
    let (mut a, mut b) = (lo, hi);
    let fa = end(a);
    assert!(fa * end(b) < 0.0);
    for _ in 0..60 {
        let m = 0.5 * (a + b);
        if end(m) * fa > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Superposed linear hanging modes: displacement along x1, velocity along x2,
/// amplitudes uniform in ±amplitude/k for modes k = 1..3.
pub fn mode_superposition(
    rng: &mut ChaCha8Rng,
    grid: &Grid,
    amplitude: f64,
) -> (Vec<string_lab::Vec3>, Vec<string_lab::Vec3>) {
    use string_lab::scenarios::{hanging_perturbed, mode_frequency_exact, mode_shape};
    let draw = |rng: &mut ChaCha8Rng| -> Vec<(f64, f64)> {
        (1..=3).map(|k| (mode_frequency_exact(k), amplitude * rng.random_range(-1.0..1.0) / k as f64)).collect()
    };
    let modes = draw(rng);
    let vel = draw(rng);
    let x0 = hanging_perturbed(grid, &modes).x;
    let x1 = grid.sample(|s| {
        string_lab::Vec3::new(0.0, vel.iter().map(|&(w, b)| w * b * mode_shape(w, s).0).sum(), 0.0)
    });
    (x0, x1)
}
