//! Two-point boundary value problem for the tension and the auxiliary φ-equation.
//!
//! −τ'' + qτ = h on (0, 1), τ(0) = 0, τ'(1) = a.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::{check_finite, DiffOps, Grid, StringState};
use crate::norms::weighted_sq;
use crate::Vec3;

pub const RESIDUAL_LIMIT: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct BvpInputs {
    pub q: Vec<f64>,
    pub h: Vec<f64>,
    pub a: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensionField {
    pub tau: Vec<f64>,
    pub tau_prime: Vec<f64>,
    pub stability_margin: f64,
}

impl TensionField {
    pub fn from_tau(tau: Vec<f64>, grid: &Grid) -> Result<Self> {
        let tau_prime = DiffOps::default().d1(&tau, grid)?;
        let mut tf = TensionField { tau, tau_prime, stability_margin: 0.0 };
        tf.stability_margin = stability_margin(&tf, grid);
        Ok(tf)
    }

    pub fn max_tau(&self) -> f64 {
        self.tau.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Tridiagonal solve without pivoting. `lower[i]` multiplies x[i-1], `upper[i]` x[i+1].
pub fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut beta = diag[0];
    if beta == 0.0 {
        return Err(LabError::SingularSystem { row: 0 });
    }
    c[0] = upper[0] / beta;
    d[0] = rhs[0] / beta;
    for i in 1..n {
        beta = diag[i] - lower[i] * c[i - 1];
        if beta == 0.0 || !beta.is_finite() {
            return Err(LabError::SingularSystem { row: i });
        }
        c[i] = upper[i] / beta;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / beta;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    Ok(x)
}

pub fn solve_tbvp(inputs: &BvpInputs, grid: &Grid) -> Result<TensionField> {
    grid.check_len(&inputs.q)?;
    grid.check_len(&inputs.h)?;
    check_finite(&inputs.q, "q")?;
    check_finite(&inputs.h, "h")?;
    if !inputs.a.is_finite() {
        return Err(LabError::NonFinite("a".into()));
    }
    if let Some(i) = inputs.q.iter().position(|&v| v < 0.0) {
        return Err(LabError::InvalidParameter(format!("q < 0 at node {i}")));
    }
    let n = grid.n_cells();
    let hh = grid.h();
    let h2 = hh * hh;
    // unknowns τ_1..τ_n, rows scaled by h²
    let mut lower = vec![-1.0; n];
    let mut upper = vec![-1.0; n];
    let mut diag = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for r in 0..n {
        let i = r + 1;
        diag[r] = 2.0 + h2 * inputs.q[i];
        rhs[r] = h2 * inputs.h[i];
    }
    lower[0] = 0.0;
    lower[n - 1] = -2.0;
    upper[n - 1] = 0.0;
    rhs[n - 1] += 2.0 * hh * inputs.a;

    let sol = thomas(&lower, &diag, &upper, &rhs)?;

    let mut res: f64 = 0.0;
    let mut amax: f64 = 0.0;
    for r in 0..n {
        let mut ax = diag[r] * sol[r];
        if r > 0 {
            ax += lower[r] * sol[r - 1];
        }
        if r + 1 < n {
            ax += upper[r] * sol[r + 1];
        }
        res = res.max((ax - rhs[r]).abs());
        amax = amax.max(diag[r].abs() + lower[r].abs() + upper[r].abs());
    }
    let scale = rhs.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
        + amax * sol.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let rel = if scale > 0.0 { res / scale } else { res };
    if !(rel <= RESIDUAL_LIMIT) {
        return Err(LabError::ResidualCheck { residual: rel, limit: RESIDUAL_LIMIT });
    }

    let mut tau = Vec::with_capacity(n + 1);
    tau.push(0.0);
    tau.extend(sol);
    TensionField::from_tau(tau, grid)
}

pub fn tension_inputs(state: &StringState, g: &Vec3, grid: &Grid) -> Result<BvpInputs> {
    let ops = DiffOps::default();
    let xs = ops.d1(&state.x, grid)?;
    let xss = ops.d2(&state.x, grid)?;
    let vs = ops.d1(&state.v, grid)?;
    Ok(BvpInputs {
        q: xss.iter().map(|v| v.norm_squared()).collect(),
        h: vs.iter().map(|v| v.norm_squared()).collect(),
        a: -g.dot(&xs[grid.n_cells()]),
    })
}

pub fn tension_from_state(state: &StringState, g: &Vec3, grid: &Grid) -> Result<TensionField> {
    solve_tbvp(&tension_inputs(state, g, grid)?, grid)
}

/// min τ(s_i)/s_i over i ≥ 1, together with the limit τ'(0) at the free end.
pub fn stability_margin(tf: &TensionField, grid: &Grid) -> f64 {
    let mut m = tf.tau_prime[0];
    for i in 1..tf.tau.len() {
        m = m.min(tf.tau[i] / grid.node(i));
    }
    m
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhiSolution {
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
}

fn midpoint_values(q: &[f64]) -> Vec<f64> {
    let n = q.len() - 1;
    (0..n)
        .map(|i| {
            let v = if i == 0 {
                (5.0 * q[0] + 15.0 * q[1] - 5.0 * q[2] + q[3]) / 16.0
            } else if i == n - 1 {
                (5.0 * q[n] + 15.0 * q[n - 1] - 5.0 * q[n - 2] + q[n - 3]) / 16.0
            } else {
                (-q[i - 1] + 9.0 * q[i] + 9.0 * q[i + 1] - q[i + 2]) / 16.0
            };
            v.max(0.0)
        })
        .collect()
}

/// −φ'' + qφ = 0, φ(0) = 0, φ'(0) = 1, marched by RK4 node to node.
pub fn solve_phi(q: &[f64], grid: &Grid) -> Result<PhiSolution> {
    grid.check_len(q)?;
    check_finite(q, "q")?;
    if let Some(i) = q.iter().position(|&v| v < 0.0) {
        return Err(LabError::InvalidParameter(format!("q < 0 at node {i}")));
    }
    let n = grid.n_cells();
    let h = grid.h();
    let qm = midpoint_values(q);
    let mut phi = vec![0.0; n + 1];
    let mut dphi = vec![0.0; n + 1];
    dphi[0] = 1.0;
    for i in 0..n {
        let (p, dp) = (phi[i], dphi[i]);
        let k1 = (dp, q[i] * p);
        let k2 = (dp + 0.5 * h * k1.1, qm[i] * (p + 0.5 * h * k1.0));
        let k3 = (dp + 0.5 * h * k2.1, qm[i] * (p + 0.5 * h * k2.0));
        let k4 = (dp + h * k3.1, q[i + 1] * (p + h * k3.0));
        phi[i + 1] = p + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        dphi[i + 1] = dp + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        if !(phi[i + 1] > 0.0) {
            return Err(LabError::NonPositivePhi { node: i + 1 });
        }
    }
    Ok(PhiSolution { phi, dphi })
}

/// Explicit lower bound for τ_0(s)/s in terms of the data:
/// (−g·x0'(1) + ‖s^{1/2}x1'‖² e^{−A}) e^{−A}, A = ‖s^{1/2}x0''‖².
pub fn tension_lower_bound(x0: &[Vec3], x1: &[Vec3], g: &Vec3, grid: &Grid) -> Result<f64> {
    let ops = DiffOps::default();
    let x0s = ops.d1(x0, grid)?;
    let x0ss = ops.d2(x0, grid)?;
    let x1s = ops.d1(x1, grid)?;
    let a = weighted_sq(&x0ss, 1, grid);
    let b = weighted_sq(&x1s, 1, grid);
    let decay = (-a).exp();
    Ok((-g.dot(&x0s[grid.n_cells()]) + b * decay) * decay)
}
