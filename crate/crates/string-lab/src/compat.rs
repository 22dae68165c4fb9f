//! Time-derivative jet of the initial data, compatibility residuals and the
//! structural identities satisfied by the jet.

use serde::Serialize;

use crate::dynamics::tension_divergence;
use crate::error::{LabError, Result};
use crate::grid::{integrate_from_fixed_end, DiffOps, Grid};
use crate::tension::{solve_tbvp, BvpInputs};
use crate::Vec3;

pub const MIN_JET_ORDER: usize = 2;
pub const MAX_JET_ORDER: usize = 7;

const FACTORIAL: [u64; 8] = [1, 1, 2, 6, 24, 120, 720, 5040];

pub fn binomial(n: usize, k: usize) -> u64 {
    FACTORIAL[n] / (FACTORIAL[k] * FACTORIAL[n - k])
}

pub fn multinomial(n: usize, k0: usize, k1: usize, k2: usize) -> u64 {
    debug_assert_eq!(k0 + k1 + k2, n);
    FACTORIAL[n] / (FACTORIAL[k0] * FACTORIAL[k1] * FACTORIAL[k2])
}

#[derive(Clone, Debug, PartialEq)]
pub struct InitialDataJet {
    pub order: usize,
    /// x_0 .. x_{m-1}.
    pub x_jet: Vec<Vec<Vec3>>,
    /// τ_0 .. τ_{m-2}.
    pub tau_jet: Vec<Vec<f64>>,
    /// u_k = x_k'.
    pub u_jet: Vec<Vec<Vec3>>,
    /// |x_j(1)| for j = 0 .. m-1.
    pub residuals: Vec<f64>,
}

impl InitialDataJet {
    /// x_j(1) as a vector.
    pub fn trace(&self, j: usize) -> Vec3 {
        *self.x_jet[j].last().unwrap()
    }
}

fn check_order(m: usize) -> Result<()> {
    if !(MIN_JET_ORDER..=MAX_JET_ORDER).contains(&m) {
        return Err(LabError::OutOfRange { what: "jet order", value: m.to_string() });
    }
    Ok(())
}

/// Jet from position and velocity fields; derivatives by second-order stencils.
pub fn initial_jet(x0: &[Vec3], x1: &[Vec3], g: &Vec3, m: usize, grid: &Grid) -> Result<InitialDataJet> {
    grid.check_len(x0)?;
    grid.check_len(x1)?;
    check_order(m)?;
    let ops = DiffOps::default();
    let u = vec![ops.d1(x0, grid)?, ops.d1(x1, grid)?];
    let xss = vec![ops.d2(x0, grid)?, ops.d2(x1, grid)?];
    recursion(vec![x0.to_vec(), x1.to_vec()], u, xss, g, m, grid)
}

/// Jet from tangent fields u0 = x0', u1 = x1'; positions are rebuilt from the fixed end.
pub fn jet_from_tangents(u0: &[Vec3], u1: &[Vec3], g: &Vec3, m: usize, grid: &Grid) -> Result<InitialDataJet> {
    grid.check_len(u0)?;
    grid.check_len(u1)?;
    check_order(m)?;
    let ops = DiffOps::default();
    let x = vec![integrate_from_fixed_end(u0, grid), integrate_from_fixed_end(u1, grid)];
    let xss = vec![ops.d1(u0, grid)?, ops.d1(u1, grid)?];
    recursion(x, vec![u0.to_vec(), u1.to_vec()], xss, g, m, grid)
}

/// (τw')' with both end values extrapolated cubically from the interior, so the
/// discretization error stays smooth up to the boundary and survives the repeated
/// differentiation in the recursion.
fn jet_divergence(tau: &[f64], w: &[Vec3], grid: &Grid) -> Result<Vec<Vec3>> {
    let mut d = tension_divergence(tau, w, grid)?;
    let n = grid.n_cells();
    d[0] = d[1] * 4.0 - d[2] * 6.0 + d[3] * 4.0 - d[4];
    d[n] = d[n - 1] * 4.0 - d[n - 2] * 6.0 + d[n - 3] * 4.0 - d[n - 4];
    Ok(d)
}

fn recursion(
    mut x: Vec<Vec<Vec3>>,
    mut u: Vec<Vec<Vec3>>,
    mut xss: Vec<Vec<Vec3>>,
    g: &Vec3,
    m: usize,
    grid: &Grid,
) -> Result<InitialDataJet> {
    let ops = DiffOps::default();
    let len = grid.len();
    let n = grid.n_cells();
    let q: Vec<f64> = xss[0].iter().map(|v| v.norm_squared()).collect();
    let mut tau: Vec<Vec<f64>> = Vec::new();
    for j in 0..=m - 2 {
        let mut h = vec![0.0; len];
        for j1 in 0..=j {
            let c = binomial(j, j1) as f64;
            for (i, hi) in h.iter_mut().enumerate() {
                *hi += c * u[j1 + 1][i].dot(&u[j - j1 + 1][i]);
            }
        }
        for j0 in 0..j {
            for j1 in 0..=j - j0 {
                let j2 = j - j0 - j1;
                let c = multinomial(j, j0, j1, j2) as f64;
                for (i, hi) in h.iter_mut().enumerate() {
                    *hi -= c * xss[j1][i].dot(&xss[j2][i]) * tau[j0][i];
                }
            }
        }
        let a = -g.dot(&u[j][n]);
        let tf = solve_tbvp(&BvpInputs { q: q.clone(), h, a }, grid)?;
        tau.push(tf.tau);
        if j + 2 <= m - 1 {
            let mut next = vec![Vec3::zeros(); len];
            for j0 in 0..=j {
                let c = binomial(j, j0) as f64;
                let div = jet_divergence(&tau[j0], &x[j - j0], grid)?;
                for (acc, d) in next.iter_mut().zip(div) {
                    *acc += d * c;
                }
            }
            if j == 0 {
                for acc in next.iter_mut() {
                    *acc += g;
                }
            }
            u.push(ops.d1(&next, grid)?);
            xss.push(ops.d2(&next, grid)?);
            x.push(next);
        }
    }
    let residuals = x.iter().map(|f| f[n].norm()).collect();
    Ok(InitialDataJet { order: m, x_jet: x, tau_jet: tau, u_jet: u, residuals })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompatibilityReport {
    pub pass: bool,
    pub residuals: Vec<f64>,
    /// First order whose residual exceeds the tolerance.
    pub first_failure: Option<(usize, f64)>,
}

/// Residuals |x_j(1)| for j = 0..=order.
pub fn check_compatibility(jet: &InitialDataJet, order: usize, tol: f64) -> Result<CompatibilityReport> {
    if order >= jet.order {
        return Err(LabError::OutOfRange { what: "compatibility order", value: order.to_string() });
    }
    let residuals: Vec<f64> = jet.residuals[..=order].to_vec();
    let first_failure = residuals.iter().enumerate().find(|(_, r)| !(**r <= tol)).map(|(j, r)| (j, *r));
    Ok(CompatibilityReport { pass: first_failure.is_none(), residuals, first_failure })
}

/// Σ_{j1+j2=j} C(j, j1) u_{j1}·u_{j2} − δ_{j0}.
pub fn orthogonality_identity(jet: &InitialDataJet, j: usize) -> Result<Vec<f64>> {
    if j >= jet.order {
        return Err(LabError::OutOfRange { what: "identity order", value: j.to_string() });
    }
    let len = jet.u_jet[0].len();
    let mut out = vec![if j == 0 { -1.0 } else { 0.0 }; len];
    for j1 in 0..=j {
        let c = binomial(j, j1) as f64;
        for (i, o) in out.iter_mut().enumerate() {
            *o += c * jet.u_jet[j1][i].dot(&jet.u_jet[j - j1][i]);
        }
    }
    Ok(out)
}

/// Σ_{j1+j2=j} C(j, j1) x_{j1+2}·u_{j2} − (τ_j' + g·u_j).
pub fn tension_identity(jet: &InitialDataJet, j: usize, g: &Vec3, grid: &Grid) -> Result<Vec<f64>> {
    if j + 3 > jet.order {
        return Err(LabError::OutOfRange { what: "identity order", value: j.to_string() });
    }
    let tau_s = DiffOps::default().d1(&jet.tau_jet[j], grid)?;
    let mut out: Vec<f64> = (0..grid.len()).map(|i| -(tau_s[i] + g.dot(&jet.u_jet[j][i]))).collect();
    for j1 in 0..=j {
        let c = binomial(j, j1) as f64;
        for (i, o) in out.iter_mut().enumerate() {
            *o += c * jet.x_jet[j1 + 2][i].dot(&jet.u_jet[j - j1][i]);
        }
    }
    Ok(out)
}
