//! Weighted Sobolev norms X^m, Y^m, X^k_eps, the averaging operator and the disc lift.
//!
//! All integrals use the composite trapezoid rule on grid nodes, derivatives use
//! second-order stencils.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::{cumulative_from_zero, derivative, trapezoid, FieldValue, Grid};

pub const MAX_ORDER: usize = 6;

/// (derivative order, exponent of s multiplying |∂^p u|^2) for each term of ‖u‖²_{X^m}.
fn xm_terms(m: usize) -> Vec<(usize, i32)> {
    let k = m / 2;
    let mut terms: Vec<(usize, i32)> = (0..=k).map(|i| (i, 0)).collect();
    if m % 2 == 0 {
        terms.extend((1..=k).map(|j| (k + j, 2 * j as i32)));
    } else {
        terms.extend((1..=k + 1).map(|j| (k + j, 2 * j as i32 - 1)));
    }
    terms
}

fn check_order(m: usize, grid: &Grid) -> Result<()> {
    if m > MAX_ORDER {
        return Err(LabError::OutOfRange { what: "norm order", value: m.to_string() });
    }
    if grid.n_cells() < 4 * m {
        return Err(LabError::GridTooCoarse { n_cells: grid.n_cells(), min: 4 * m });
    }
    Ok(())
}

/// ∂^0 u .. ∂^p u, each from its own second-order stencil.
pub fn derivatives<T: FieldValue>(u: &[T], p: usize, grid: &Grid) -> Result<Vec<Vec<T>>> {
    (0..=p).map(|q| derivative(u, q, grid)).collect()
}

/// ‖s^{alpha/2} u‖²_{L²}.
pub fn weighted_sq<T: FieldValue>(u: &[T], alpha: i32, grid: &Grid) -> f64 {
    let vals: Vec<f64> = u
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let w = if alpha == 0 { 1.0 } else { grid.node(i).powi(alpha) };
            w * v.norm_sq()
        })
        .collect();
    trapezoid(&vals, grid)
}

pub fn l2_norm<T: FieldValue>(u: &[T], grid: &Grid) -> f64 {
    weighted_sq(u, 0, grid).sqrt()
}

/// ‖s^beta u‖_{L^∞} over nodes.
fn weighted_sup<T: FieldValue>(u: &[T], beta: f64, grid: &Grid) -> f64 {
    u.iter().enumerate().fold(0.0_f64, |m, (i, v)| {
        let w = if beta == 0.0 { 1.0 } else { grid.node(i).powf(beta) };
        m.max(w * v.norm_sq().sqrt())
    })
}

/// ‖s^beta u‖²_{L²} for real beta.
fn weighted_sq_real<T: FieldValue>(u: &[T], beta: f64, grid: &Grid) -> f64 {
    let vals: Vec<f64> = u
        .iter()
        .enumerate()
        .map(|(i, v)| grid.node(i).powf(2.0 * beta) * v.norm_sq())
        .collect();
    trapezoid(&vals, grid)
}

pub fn xm_norm<T: FieldValue>(u: &[T], m: usize, grid: &Grid) -> Result<f64> {
    check_order(m, grid)?;
    let terms = xm_terms(m);
    let top = terms.iter().map(|t| t.0).max().unwrap_or(0);
    let ders = derivatives(u, top, grid)?;
    Ok(terms
        .iter()
        .map(|&(p, alpha)| weighted_sq(&ders[p], alpha, grid))
        .sum::<f64>()
        .sqrt())
}

/// ‖u‖_{Y^m}, defined through ‖U‖²_{X^{m+1}} = ‖U‖²_{L²} + ‖u‖²_{Y^m} with U' = u.
///
/// The terms of ‖U‖_{X^{m+1}} carrying at least one derivative are evaluated on u
/// directly, which equals the difference above without cancellation.
pub fn ym_norm<T: FieldValue>(u: &[T], m: usize, grid: &Grid) -> Result<f64> {
    check_order(m + 1, grid)?;
    let terms: Vec<(usize, i32)> = xm_terms(m + 1).into_iter().filter(|t| t.0 >= 1).collect();
    let top = terms.iter().map(|t| t.0 - 1).max().unwrap_or(0);
    let ders = derivatives(u, top, grid)?;
    Ok(terms
        .iter()
        .map(|&(p, alpha)| weighted_sq(&ders[p - 1], alpha, grid))
        .sum::<f64>()
        .sqrt())
}

pub fn xeps_norm<T: FieldValue>(u: &[T], k: usize, eps: f64, grid: &Grid) -> Result<f64> {
    if !(1..=3).contains(&k) {
        return Err(LabError::OutOfRange { what: "X_eps order", value: k.to_string() });
    }
    if !(eps > 0.0 && eps < 0.5) {
        return Err(LabError::OutOfRange { what: "eps", value: eps.to_string() });
    }
    let ders = derivatives(u, k, grid)?;
    let sq = match k {
        1 => weighted_sup(&ders[0], eps, grid).powi(2) + weighted_sq_real(&ders[1], 0.5 + eps, grid),
        2 => {
            weighted_sup(&ders[0], 0.0, grid).powi(2)
                + weighted_sq_real(&ders[1], eps, grid)
                + weighted_sq_real(&ders[2], 1.0 + eps, grid)
        }
        _ => {
            weighted_sup(&ders[0], 0.0, grid).powi(2)
                + weighted_sup(&ders[1], eps, grid).powi(2)
                + weighted_sq_real(&ders[2], 0.5 + eps, grid)
                + weighted_sq_real(&ders[3], 1.5 + eps, grid)
        }
    };
    Ok(sq.sqrt())
}

/// (𝓜u)(s) = (1/s)∫_0^s u, with value u(0) at s = 0.
pub fn averaging<T: FieldValue>(u: &[T], grid: &Grid) -> Result<Vec<T>> {
    grid.check_len(u)?;
    let cum = cumulative_from_zero(u, grid);
    Ok(cum
        .iter()
        .enumerate()
        .map(|(i, c)| if i == 0 { u[0] } else { *c * (1.0 / grid.node(i)) })
        .collect())
}

const DISC_ANGLES: usize = 64;

/// ‖u♯‖_{H^m(D)} for u♯(x1, x2) = u(x1² + x2²), m ≤ 3.
pub fn disc_lift_norm<T: FieldValue>(u: &[T], m: usize, grid: &Grid) -> Result<f64> {
    if m > 3 {
        return Err(LabError::OutOfRange { what: "disc lift order", value: m.to_string() });
    }
    let d = derivatives(u, m, grid)?;
    let dtheta = 2.0 * std::f64::consts::PI / DISC_ANGLES as f64;
    let mut radial = vec![0.0; grid.len()];
    for (i, r_val) in radial.iter_mut().enumerate() {
        let s = grid.node(i);
        let r = s.sqrt();
        let mut acc = 0.0;
        for a in 0..DISC_ANGLES {
            let th = a as f64 * dtheta;
            let (x1, x2) = (r * th.cos(), r * th.sin());
            acc += d[0][i].norm_sq();
            if m >= 1 {
                acc += (d[1][i] * (2.0 * x1)).norm_sq() + (d[1][i] * (2.0 * x2)).norm_sq();
            }
            if m >= 2 {
                let u1 = d[1][i];
                let u2 = d[2][i];
                acc += (u1 * 2.0 + u2 * (4.0 * x1 * x1)).norm_sq()
                    + (u2 * (4.0 * x1 * x2)).norm_sq()
                    + (u1 * 2.0 + u2 * (4.0 * x2 * x2)).norm_sq();
            }
            if m >= 3 {
                let u2 = d[2][i];
                let u3 = d[3][i];
                acc += (u2 * (12.0 * x1) + u3 * (8.0 * x1 * x1 * x1)).norm_sq()
                    + (u2 * (4.0 * x2) + u3 * (8.0 * x1 * x1 * x2)).norm_sq()
                    + (u2 * (4.0 * x1) + u3 * (8.0 * x1 * x2 * x2)).norm_sq()
                    + (u2 * (12.0 * x2) + u3 * (8.0 * x2 * x2 * x2)).norm_sq();
            }
        }
        *r_val = 0.5 * acc * dtheta;
    }
    Ok(trapezoid(&radial, grid).sqrt())
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub xm: BTreeMap<usize, f64>,
    pub ym: BTreeMap<usize, f64>,
    pub xeps: BTreeMap<String, f64>,
    pub l2: f64,
}

impl NormReport {
    /// X^m for m ≤ max_m, Y^m for m < max_m and X^k_eps for k = 1..3 at each eps.
    pub fn compute<T: FieldValue>(u: &[T], max_m: usize, eps: &[f64], grid: &Grid) -> Result<Self> {
        let mut report = NormReport { l2: l2_norm(u, grid), ..Default::default() };
        for m in 0..=max_m {
            report.xm.insert(m, xm_norm(u, m, grid)?);
            if m < max_m {
                report.ym.insert(m, ym_norm(u, m, grid)?);
            }
        }
        for &e in eps {
            for k in 1..=3 {
                report.xeps.insert(xeps_key(k, e), xeps_norm(u, k, e, grid)?);
            }
        }
        Ok(report)
    }
}

pub fn xeps_key(k: usize, eps: f64) -> String {
    format!("k={k},eps={eps}")
}
