//! Repair of nearly compatible initial data by localized cutoff corrections at the
//! fixed end, optionally through the unit-tangent map so the constraints survive.
//!
//! Data are handled in cell form: tangents live on cell midpoints and positions are
//! rebuilt by exact cumulative sums from the fixed end.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::compat::{initial_jet, InitialDataJet};
use crate::error::{LabError, Result};
use crate::grid::{edge_derivative, integrate_edges, integrate_from_fixed_end, Grid};
use crate::norms::xm_norm;
use crate::Vec3;

const FACTORIAL: [f64; 7] = [1.0, 1.0, 2.0, 6.0, 24.0, 120.0, 720.0];

fn bump_edge(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// Smooth bump: 1 on |r| ≤ 1, 0 on |r| ≥ 2.
pub fn bump(r: f64) -> f64 {
    let a = r.abs();
    let up = bump_edge(2.0 - a);
    let down = bump_edge(a - 1.0);
    up / (up + down)
}

/// ψ_j^δ(s) = ((s − 1)^j / j!) ψ((s − 1)/δ), identically zero for δ ≤ 0.
pub fn cutoff_psi(j: usize, delta: f64, s_values: &[f64]) -> Result<Vec<f64>> {
    if j > 6 {
        return Err(LabError::OutOfRange { what: "cutoff order", value: j.to_string() });
    }
    if !(delta > 0.0) {
        return Ok(vec![0.0; s_values.len()]);
    }
    Ok(s_values
        .iter()
        .map(|&s| (s - 1.0).powi(j as i32) / FACTORIAL[j] * bump((s - 1.0) / delta))
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RepairMode {
    Free,
    Constrained,
}

/// Cutoff correction of a pair of tangent fields.
///
/// Coefficient a_c (c = 1, 2, ...) enters with scale δ^{1−c}: odd c on the first
/// field through ψ_c, even c on the second field through ψ_{c−1}. When `eps` is
/// set the highest coefficient uses ψ^ε instead of ψ^δ.
#[derive(Clone, Debug, PartialEq)]
pub struct CutoffAnsatz {
    pub delta: f64,
    pub eps: Option<f64>,
    pub coefficients: Vec<Vec3>,
    pub s: Vec<f64>,
    pub v0: Vec<Vec3>,
    pub v1: Vec<Vec3>,
}

impl CutoffAnsatz {
    pub fn new(v0: Vec<Vec3>, v1: Vec<Vec3>, s: Vec<f64>, delta: f64) -> Result<Self> {
        if v0.len() != s.len() || v1.len() != s.len() {
            return Err(LabError::LengthMismatch { expected: s.len(), found: v0.len().min(v1.len()) });
        }
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(LabError::OutOfRange { what: "delta", value: delta.to_string() });
        }
        Ok(CutoffAnsatz { delta, eps: None, coefficients: Vec::new(), s, v0, v1 })
    }

    /// Ansatz on grid nodes.
    pub fn on_grid(v0: Vec<Vec3>, v1: Vec<Vec3>, grid: &Grid, delta: f64) -> Result<Self> {
        Self::new(v0, v1, grid.nodes(), delta)
    }

    pub fn with_coefficients(mut self, coefficients: Vec<Vec3>) -> Self {
        self.coefficients = coefficients;
        self
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = Some(eps);
        self
    }

    /// Number of coefficients the form for jet order m carries.
    pub fn coefficient_count(m: usize, raised: bool) -> usize {
        if raised {
            m - 1
        } else {
            m - 2
        }
    }
}

/// The corrected tangent fields of the ansatz.
pub fn build_candidate(ansatz: &CutoffAnsatz) -> Result<(Vec<Vec3>, Vec<Vec3>)> {
    let mut u0 = ansatz.v0.clone();
    let mut u1 = ansatz.v1.clone();
    let count = ansatz.coefficients.len();
    for (idx, a) in ansatz.coefficients.iter().enumerate() {
        let c = idx + 1;
        let order = if c % 2 == 1 { c } else { c - 1 };
        let width = match ansatz.eps {
            Some(eps) if c == count => eps,
            _ => ansatz.delta,
        };
        let psi = cutoff_psi(order, width, &ansatz.s)?;
        let scale = ansatz.delta.powi(1 - c as i32);
        let target = if c % 2 == 1 { &mut u0 } else { &mut u1 };
        for (t, p) in target.iter_mut().zip(&psi) {
            *t += a * (p * scale);
        }
    }
    Ok((u0, u1))
}

/// u0 = v0/|v0|, u1 = P(v0) v1 / |v0| pointwise.
pub fn constrained_map(v0: &[Vec3], v1: &[Vec3]) -> Result<(Vec<Vec3>, Vec<Vec3>)> {
    if v0.len() != v1.len() {
        return Err(LabError::LengthMismatch { expected: v0.len(), found: v1.len() });
    }
    let mut u0 = Vec::with_capacity(v0.len());
    let mut u1 = Vec::with_capacity(v0.len());
    for (i, (a, b)) in v0.iter().zip(v1).enumerate() {
        let len = a.norm();
        if !(len >= 0.5) {
            return Err(LabError::Degenerate { node: i, norm: len });
        }
        let f = a / len;
        u1.push((b - f * f.dot(b)) / len);
        u0.push(f);
    }
    Ok((u0, u1))
}

/// Θ_j(u0, u1) = τ_j(1), positions rebuilt from the fixed end.
pub fn theta(u0: &[Vec3], u1: &[Vec3], j: usize, g: &Vec3, grid: &Grid) -> Result<f64> {
    Ok(*theta_vector(u0, u1, j, g, grid)?.last().unwrap())
}

/// Θ_0 .. Θ_j.
pub fn theta_vector(u0: &[Vec3], u1: &[Vec3], j: usize, g: &Vec3, grid: &Grid) -> Result<Vec<f64>> {
    grid.check_len(u0)?;
    grid.check_len(u1)?;
    let x0 = integrate_from_fixed_end(u0, grid);
    let x1 = integrate_from_fixed_end(u1, grid);
    let jet = initial_jet(&x0, &x1, g, j + 2, grid)?;
    Ok(jet.tau_jet.iter().map(|t| *t.last().unwrap()).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepairOptions {
    pub mode: RepairMode,
    pub tol: f64,
    pub max_iter: usize,
    pub delta0: f64,
    pub max_halvings: usize,
    pub fd_step: f64,
    pub theta_margin: f64,
    /// Width of the ε-cutoff carrying the extra top coefficient; `None` uses the plain form.
    pub eps: Option<f64>,
}

impl Default for RepairOptions {
    fn default() -> Self {
        RepairOptions {
            mode: RepairMode::Free,
            tol: 1e-9,
            max_iter: 50,
            delta0: 0.25,
            max_halvings: 10,
            fd_step: 1e-6,
            theta_margin: 1e-3,
            eps: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepairReport {
    pub mode: RepairMode,
    pub order: usize,
    pub delta: f64,
    pub eps: Option<f64>,
    pub a: Vec<f64>,
    pub residuals_before: Vec<f64>,
    pub residuals_after: Vec<f64>,
    pub correction_norm: f64,
    pub newton_iters: usize,
    /// max-norm of the Newton residual after each pass.
    pub history: Vec<f64>,
    pub delta_trials: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct RepairOutput {
    pub x0: Vec<Vec3>,
    pub x1: Vec<Vec3>,
    /// Cell tangents the repaired positions were integrated from.
    pub u0: Vec<Vec3>,
    pub u1: Vec<Vec3>,
    pub report: RepairReport,
}

struct Problem<'a> {
    grid: &'a Grid,
    g: Vec3,
    m: usize,
    mode: RepairMode,
    s: Vec<f64>,
    v0: Vec<Vec3>,
    v1: Vec<Vec3>,
    eps: Option<f64>,
    count: usize,
    /// Unit tangent and τ_0 at the fixed end of the unrepaired data.
    tangent: Vec3,
    theta0: f64,
}

struct Evaluation {
    e0: Vec<Vec3>,
    e1: Vec<Vec3>,
    x0: Vec<Vec3>,
    x1: Vec<Vec3>,
    jet: InitialDataJet,
    residual: DVector<f64>,
}

impl Problem<'_> {
    fn jet_order(&self) -> usize {
        if self.eps.is_some() {
            self.m + 1
        } else {
            self.m
        }
    }

    fn unpack(a: &DVector<f64>) -> Vec<Vec3> {
        a.as_slice().chunks(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect()
    }

    fn evaluate(&self, a: &DVector<f64>, delta: f64) -> Result<Evaluation> {
        let coeffs = Self::unpack(a);
        let mut ansatz = CutoffAnsatz::new(self.v0.clone(), self.v1.clone(), self.s.clone(), delta)?
            .with_coefficients(coeffs.clone());
        ansatz.eps = self.eps;
        let (mut e0, mut e1) = build_candidate(&ansatz)?;
        if self.mode == RepairMode::Constrained {
            (e0, e1) = constrained_map(&e0, &e1)?;
        }
        let x0 = integrate_edges(&e0, self.grid);
        let x1 = integrate_edges(&e1, self.grid);
        let jet = initial_jet(&x0, &x1, &self.g, self.jet_order(), self.grid)?;
        let mut residual = DVector::zeros(3 * self.count);
        let u = self.tangent;
        for k in 0..self.count {
            let c = k + 2;
            let mut r = jet.trace(c) * delta.powi(k as i32);
            if self.mode == RepairMode::Constrained {
                r -= u * u.dot(&r);
                r += u * (self.theta0.powi((c / 2) as i32) * u.dot(&coeffs[k]));
            }
            residual.rows_mut(3 * k, 3).copy_from(&r);
        }
        Ok(Evaluation { e0, e1, x0, x1, jet, residual })
    }

    fn jacobian(&self, a: &DVector<f64>, delta: f64, step: f64) -> Result<DMatrix<f64>> {
        let dim = a.len();
        let mut jac = DMatrix::zeros(dim, dim);
        for col in 0..dim {
            let mut ap = a.clone();
            let mut am = a.clone();
            ap[col] += step;
            am[col] -= step;
            let rp = self.evaluate(&ap, delta)?.residual;
            let rm = self.evaluate(&am, delta)?.residual;
            jac.set_column(col, &((rp - rm) / (2.0 * step)));
        }
        Ok(jac)
    }
}

fn diagonally_dominant(jac: &DMatrix<f64>) -> bool {
    (0..jac.nrows()).all(|i| {
        let off: f64 = (0..jac.ncols()).filter(|&j| j != i).map(|j| jac[(i, j)].abs()).sum();
        jac[(i, i)].abs() > off
    })
}

fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn compat_residuals(jet: &InitialDataJet, top: usize) -> Vec<f64> {
    jet.residuals[..=top].to_vec()
}

/// Newton correction of the cutoff coefficients until every trace x_j(1),
/// j ≤ m − 1 (or ≤ m with the ε-form), is below `tol`.
pub fn repair_data(
    x0: &[Vec3],
    x1: &[Vec3],
    g: &Vec3,
    m: usize,
    grid: &Grid,
    options: &RepairOptions,
) -> Result<RepairOutput> {
    grid.check_len(x0)?;
    grid.check_len(x1)?;
    if !(2..=6).contains(&m) {
        return Err(LabError::OutOfRange { what: "repair order", value: m.to_string() });
    }
    if let Some(eps) = options.eps {
        if !(eps > 0.0) {
            return Err(LabError::InvalidParameter("eps must be positive".into()));
        }
    }
    let raised = options.eps.is_some();
    let top = if raised { m } else { m - 1 };
    let v0 = edge_derivative(x0, grid);
    let v1 = edge_derivative(x1, grid);
    let before = initial_jet(x0, x1, g, top + 1, grid)?;
    let residuals_before = compat_residuals(&before, top);
    let theta0 = before.tau_jet[0][grid.n_cells()];
    if !(theta0 >= options.theta_margin) {
        return Err(LabError::ThetaBelowMargin { theta: theta0, margin: options.theta_margin });
    }
    let tangent = {
        let t = *before.u_jet[0].last().unwrap();
        t / t.norm()
    };
    let problem = Problem {
        grid,
        g: *g,
        m,
        mode: options.mode,
        s: grid.midpoints(),
        v0,
        v1,
        eps: options.eps,
        count: CutoffAnsatz::coefficient_count(m, raised),
        tangent,
        theta0,
    };
    let dim = 3 * problem.count;
    let mut a = DVector::zeros(dim);

    let mut delta = options.delta0;
    let mut delta_trials = Vec::new();
    let mut dominant = dim == 0;
    for _ in 0..=options.max_halvings {
        delta_trials.push(delta);
        if dim == 0 || diagonally_dominant(&problem.jacobian(&a, delta, options.fd_step)?) {
            dominant = true;
            break;
        }
        delta *= 0.5;
    }
    if !dominant {
        return Err(LabError::JacobianSingular { halvings: options.max_halvings });
    }

    let mut history = Vec::new();
    let mut eval = problem.evaluate(&a, delta)?;
    let mut iters = 0;
    loop {
        iters += 1;
        let rnorm = max_abs(&eval.residual);
        history.push(rnorm);
        let done = compat_residuals(&eval.jet, top).iter().all(|r| *r <= options.tol) && rnorm <= options.tol;
        if done {
            break;
        }
        if iters >= options.max_iter {
            let worst = compat_residuals(&eval.jet, top).into_iter().fold(rnorm, f64::max);
            return Err(LabError::NewtonDiverged { iterations: iters, residual: worst });
        }
        let jac = problem.jacobian(&a, delta, options.fd_step)?;
        let step = jac
            .lu()
            .solve(&(-&eval.residual))
            .ok_or(LabError::JacobianSingular { halvings: delta_trials.len() - 1 })?;
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..20 {
            let trial = &a + &step * lambda;
            let te = problem.evaluate(&trial, delta)?;
            if max_abs(&te.residual) < rnorm {
                accepted = Some((trial, te));
                break;
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((trial, te)) => {
                a = trial;
                eval = te;
            }
            None => {
                let worst = compat_residuals(&eval.jet, top).into_iter().fold(rnorm, f64::max);
                return Err(LabError::NewtonDiverged { iterations: iters, residual: worst });
            }
        }
    }

    let d0: Vec<Vec3> = eval.x0.iter().zip(x0).map(|(p, q)| p - q).collect();
    let d1: Vec<Vec3> = eval.x1.iter().zip(x1).map(|(p, q)| p - q).collect();
    let correction_norm = xm_norm(&d0, m, grid)? + xm_norm(&d1, m - 1, grid)?;
    let report = RepairReport {
        mode: options.mode,
        order: m,
        delta,
        eps: options.eps,
        a: a.iter().cloned().collect(),
        residuals_before,
        residuals_after: compat_residuals(&eval.jet, top),
        correction_norm,
        newton_iters: iters,
        history,
        delta_trials,
    };
    Ok(RepairOutput { x0: eval.x0, x1: eval.x1, u0: eval.e0, u1: eval.e1, report })
}
