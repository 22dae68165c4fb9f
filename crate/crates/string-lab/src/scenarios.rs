//! Built-in string states: the hanging equilibrium, rigid rotation and small
//! hanging-chain modes.

use crate::grid::{integrate_edges, Grid, StringState};
use crate::Vec3;

pub fn gravity_down() -> Vec3 {
    Vec3::new(0.0, 0.0, -1.0)
}

/// x = (0, 0, s − 1) at rest.
pub fn equilibrium(grid: &Grid) -> StringState {
    StringState {
        t: 0.0,
        x: grid.sample(|s| Vec3::new(0.0, 0.0, s - 1.0)),
        v: vec![Vec3::zeros(); grid.len()],
    }
}

/// Exact rigid rotation x = (s − 1)(cos ωt, sin ωt, 0) without gravity.
pub fn rotating(grid: &Grid, omega: f64, t: f64) -> StringState {
    let (c, s_) = ((omega * t).cos(), (omega * t).sin());
    StringState {
        t,
        x: grid.sample(|s| Vec3::new(c, s_, 0.0) * (s - 1.0)),
        v: grid.sample(|s| Vec3::new(-s_, c, 0.0) * (omega * (s - 1.0))),
    }
}

/// Tension of the rotating solution, ω²(s − s²/2).
pub fn rotating_tension(s: f64, omega: f64) -> f64 {
    omega * omega * (s - 0.5 * s * s)
}

/// J_0(z) by its power series.
pub fn bessel_j0(z: f64) -> f64 {
    let q = -0.25 * z * z;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..80 {
        term *= q / (k as f64 * k as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1.0) {
            break;
        }
    }
    sum
}

/// k-th positive zero of J_0 (k ≥ 1) by bracketing and bisection.
pub fn bessel_j0_zero(k: usize) -> f64 {
    let mut count = 0;
    let step = 0.05;
    let mut a = step;
    loop {
        let b = a + step;
        if bessel_j0(a) * bessel_j0(b) <= 0.0 {
            count += 1;
            if count == k {
                let (mut lo, mut hi) = (a, b);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if bessel_j0(lo) * bessel_j0(mid) <= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                return 0.5 * (lo + hi);
            }
        }
        a = b;
    }
}

/// Linear mode shape y(s) = J_0(2ω√s) and its derivative, as series in s.
pub fn mode_shape(omega: f64, s: f64) -> (f64, f64) {
    let w2 = omega * omega;
    let mut term = 1.0;
    let mut y = 1.0;
    let mut dy = 0.0;
    for k in 1..80 {
        let kf = k as f64;
        // term_k = (−ω² s)^k/(k!)², derivative k·term_k/s written without dividing by s
        let dterm = -term * w2 * kf / (kf * kf);
        term *= -w2 * s / (kf * kf);
        y += term;
        dy += dterm;
        if dterm.abs() < 1e-18 && term.abs() < 1e-18 {
            break;
        }
    }
    (y, dy)
}

/// Natural frequency of the k-th linear mode, j_{0,k}/2.
pub fn mode_frequency_exact(k: usize) -> f64 {
    0.5 * bessel_j0_zero(k)
}

/// Hanging string at rest, bent in the x1 direction by Σ amplitude·y_k.
///
/// Cell tangents are exactly unit, so the arc-length constraint holds on every cell.
pub fn hanging_perturbed(grid: &Grid, modes: &[(f64, f64)]) -> StringState {
    let edges: Vec<Vec3> = grid
        .midpoints()
        .into_iter()
        .map(|s| {
            let slope: f64 = modes.iter().map(|&(omega, amp)| amp * mode_shape(omega, s).1).sum();
            Vec3::new(slope, 0.0, (1.0 - slope * slope).sqrt())
        })
        .collect();
    StringState { t: 0.0, x: integrate_edges(&edges, grid), v: vec![Vec3::zeros(); grid.len()] }
}

/// Hanging string displaced into its k-th linear mode.
pub fn hanging_mode(grid: &Grid, k: usize, amplitude: f64) -> StringState {
    hanging_perturbed(grid, &[(mode_frequency_exact(k), amplitude)])
}
