//! Semi-discrete evolution ẍ = (τx')' + g with the tension re-solved at every RK4 stage.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::{constraint_drift, edge_derivative, integrate_edges, DiffOps, Grid, StringState};
use crate::tension::{tension_from_state, TensionField};
use crate::Vec3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintMode {
    Monitor,
    Project,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "policy", content = "value")]
pub enum DtPolicy {
    Fixed(f64),
    Cfl(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    Rk4,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub gravity: [f64; 3],
    pub n_cells: usize,
    pub t_end: f64,
    pub dt: DtPolicy,
    pub constraint: ConstraintMode,
    pub snapshot_dt: f64,
    pub integrator: Integrator,
    /// Largest admissible drift of the initial data.
    pub constraint_tol: f64,
    /// A run aborts once the stability margin drops below minus this value.
    pub collapse_tol: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            gravity: [0.0, 0.0, -1.0],
            n_cells: 128,
            t_end: 1.0,
            dt: DtPolicy::Cfl(0.5),
            constraint: ConstraintMode::Project,
            snapshot_dt: 0.01,
            integrator: Integrator::Rk4,
            constraint_tol: 1e-6,
            collapse_tol: 1e-8,
        }
    }
}

impl ScenarioConfig {
    pub fn g(&self) -> Vec3 {
        Vec3::from(self.gravity)
    }

    pub fn validate(&self) -> Result<()> {
        let gn = self.g().norm();
        if !(gn.abs() <= 1e-12 || (gn - 1.0).abs() <= 1e-12) {
            return Err(LabError::InvalidParameter(format!("|gravity| = {gn}, expected 0 or 1")));
        }
        Grid::new(self.n_cells)?;
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(LabError::InvalidParameter("t_end must be positive".into()));
        }
        if !(self.snapshot_dt > 0.0 && self.snapshot_dt <= self.t_end) {
            return Err(LabError::InvalidParameter("snapshot_dt must lie in (0, t_end]".into()));
        }
        match self.dt {
            DtPolicy::Fixed(dt) if !(dt > 0.0 && dt.is_finite()) => {
                Err(LabError::InvalidParameter("dt must be positive".into()))
            }
            DtPolicy::Cfl(safety) if !(safety > 0.0 && safety <= 1.0) => {
                Err(LabError::InvalidParameter("cfl safety must lie in (0, 1]".into()))
            }
            _ => Ok(()),
        }
    }

    /// Snapshot count and the uniform spacing that divides t_end exactly.
    pub fn snapshot_layout(&self) -> (usize, f64) {
        let k = ((self.t_end / self.snapshot_dt).round() as usize).max(1);
        (k, self.t_end / k as f64)
    }
}

/// Conservative second-order discretization of (τw')'.
///
/// Built from half-cell fluxes τ_{i+1/2}(w_{i+1} − w_i)/h: centred differences
/// inside and a one-sided three-flux stencil at s = 1. The free end differentiates
/// the nodal flux τw' one-sidedly.
pub fn tension_divergence(tau: &[f64], w: &[Vec3], grid: &Grid) -> Result<Vec<Vec3>> {
    grid.check_len(tau)?;
    grid.check_len(w)?;
    let n = grid.n_cells();
    let h = grid.h();
    let flux: Vec<Vec3> = (0..n)
        .map(|i| (w[i + 1] - w[i]) * (0.5 * (tau[i] + tau[i + 1]) / h))
        .collect();
    let mut out = vec![Vec3::zeros(); n + 1];
    for i in 1..n {
        out[i] = (flux[i] - flux[i - 1]) / h;
    }
    let w0 = (w[1] * 4.0 - w[0] * 3.0 - w[2]) / (2.0 * h);
    let w1 = (w[2] - w[0]) / (2.0 * h);
    let w2 = (w[3] - w[1]) / (2.0 * h);
    out[0] = (w0 * tau[0] * -3.0 + w1 * (tau[1] * 4.0) - w2 * tau[2]) / (2.0 * h);
    out[n] = (flux[n - 1] * 2.0 - flux[n - 2] * 3.0 + flux[n - 3]) / h;
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct Acceleration {
    pub acc: Vec<Vec3>,
    pub tension: TensionField,
    /// Set when the stability margin is not positive.
    pub unstable: bool,
}

pub fn acceleration(state: &StringState, g: &Vec3, grid: &Grid) -> Result<Acceleration> {
    let tension = tension_from_state(state, g, grid)?;
    let mut acc = tension_divergence(&tension.tau, &state.x, grid)?;
    for a in acc.iter_mut() {
        *a += g;
    }
    let n = grid.n_cells();
    acc[n] = Vec3::zeros();
    let unstable = !(tension.stability_margin > 0.0);
    Ok(Acceleration { acc, tension, unstable })
}

pub fn cfl_dt(tf: &TensionField, grid: &Grid, safety: f64) -> f64 {
    let tmax = tf.max_tau();
    if tmax > 0.0 {
        safety * grid.h() / tmax.sqrt()
    } else {
        safety * grid.h()
    }
}

fn axpy(base: &[Vec3], k: &[Vec3], c: f64) -> Vec<Vec3> {
    base.iter().zip(k).map(|(b, d)| b + d * c).collect()
}

/// Classical RK4 step; returns the new state and the margin seen at the first stage.
fn rk4(state: &StringState, g: &Vec3, dt: f64, grid: &Grid) -> Result<(StringState, f64)> {
    let n = grid.n_cells();
    let stage = |x: Vec<Vec3>, v: Vec<Vec3>| -> Result<(Vec<Vec3>, Vec<Vec3>, f64)> {
        let s = StringState { t: state.t, x, v };
        let a = acceleration(&s, g, grid)?;
        Ok((s.v, a.acc, a.tension.stability_margin))
    };
    let (k1x, k1v, margin) = stage(state.x.clone(), state.v.clone())?;
    let (k2x, k2v, _) = stage(axpy(&state.x, &k1x, 0.5 * dt), axpy(&state.v, &k1v, 0.5 * dt))?;
    let (k3x, k3v, _) = stage(axpy(&state.x, &k2x, 0.5 * dt), axpy(&state.v, &k2v, 0.5 * dt))?;
    let (k4x, k4v, _) = stage(axpy(&state.x, &k3x, dt), axpy(&state.v, &k3v, dt))?;
    let c = dt / 6.0;
    let mut x: Vec<Vec3> = (0..=n)
        .map(|i| state.x[i] + (k1x[i] + k2x[i] * 2.0 + k3x[i] * 2.0 + k4x[i]) * c)
        .collect();
    let mut v: Vec<Vec3> = (0..=n)
        .map(|i| state.v[i] + (k1v[i] + k2v[i] * 2.0 + k3v[i] * 2.0 + k4v[i]) * c)
        .collect();
    x[n] = Vec3::zeros();
    v[n] = Vec3::zeros();
    Ok((StringState { t: state.t + dt, x, v }, margin))
}

/// Renormalize cell tangents, project cell velocity gradients onto their
/// orthogonal complement and rebuild both fields from the fixed end.
pub fn project_state(state: &StringState, grid: &Grid) -> Result<StringState> {
    let ex = edge_derivative(&state.x, grid);
    let ev = edge_derivative(&state.v, grid);
    let mut tx = Vec::with_capacity(ex.len());
    let mut tv = Vec::with_capacity(ev.len());
    for (e, w) in ex.iter().zip(&ev) {
        let len = e.norm();
        if !(len > 0.0) {
            return Err(LabError::NonFinite("degenerate cell tangent".into()));
        }
        let u = e / len;
        tv.push(w - u * u.dot(w));
        tx.push(u);
    }
    Ok(StringState { t: state.t, x: integrate_edges(&tx, grid), v: integrate_edges(&tv, grid) })
}

pub fn step(state: &StringState, g: &Vec3, dt: f64, grid: &Grid, mode: ConstraintMode) -> Result<StringState> {
    Ok(step_with_margin(state, g, dt, grid, mode)?.0)
}

fn step_with_margin(
    state: &StringState,
    g: &Vec3,
    dt: f64,
    grid: &Grid,
    mode: ConstraintMode,
) -> Result<(StringState, f64)> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(LabError::InvalidParameter(format!("dt = {dt} must be positive")));
    }
    let (mut next, margin) = rk4(state, g, dt, grid)?;
    if mode == ConstraintMode::Project {
        next = project_state(&next, grid)?;
    }
    if !next.is_finite() {
        return Err(LabError::NonFinite(format!("state after step to t = {}", next.t)));
    }
    Ok((next, margin))
}

/// The same configuration moving backward in time: x kept, v negated.
pub fn reverse(state: &StringState) -> StringState {
    StringState { t: -state.t, x: state.x.clone(), v: state.v.iter().map(|v| -v).collect() }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub state: StringState,
    pub tension: TensionField,
    pub constraint_drift: f64,
    pub stability_margin: f64,
    pub script_e: Option<f64>,
    pub big_e: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub config: ScenarioConfig,
    pub snapshots: Vec<Snapshot>,
    /// Largest constraint drift observed right after any step.
    pub max_step_drift: f64,
    pub steps: usize,
}

impl TrajectoryRecord {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.state.t).collect()
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.config.n_cells)
    }

    pub fn last_state(&self) -> Option<&StringState> {
        self.snapshots.last().map(|s| &s.state)
    }
}

#[derive(Debug)]
pub struct SimulationAbort {
    pub record: TrajectoryRecord,
    pub cause: LabError,
}

impl fmt::Display for SimulationAbort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "simulation aborted after {} snapshots: {}", self.record.snapshots.len(), self.cause)
    }
}

impl std::error::Error for SimulationAbort {}

fn snapshot(state: StringState, g: &Vec3, grid: &Grid) -> Result<Snapshot> {
    let tension = tension_from_state(&state, g, grid)?;
    Ok(Snapshot {
        constraint_drift: constraint_drift(&state.x, grid),
        stability_margin: tension.stability_margin,
        state,
        tension,
        script_e: None,
        big_e: None,
    })
}

pub fn simulate(
    config: &ScenarioConfig,
    initial: &StringState,
) -> std::result::Result<TrajectoryRecord, SimulationAbort> {
    let mut record = TrajectoryRecord {
        config: config.clone(),
        snapshots: Vec::new(),
        max_step_drift: 0.0,
        steps: 0,
    };
    match run(config, initial, &mut record) {
        Ok(()) => {
            if let Ok(grid) = record.grid() {
                crate::diagnostics::fill_energies(&mut record, &grid);
            }
            Ok(record)
        }
        Err(cause) => Err(SimulationAbort { record, cause }),
    }
}

fn run(config: &ScenarioConfig, initial: &StringState, record: &mut TrajectoryRecord) -> Result<()> {
    config.validate()?;
    let grid = Grid::new(config.n_cells)?;
    grid.check_len(&initial.x)?;
    grid.check_len(&initial.v)?;
    if initial.fixed_end_offset() > 1e-12 {
        return Err(LabError::InvalidParameter("initial state violates x(1) = 0".into()));
    }
    let drift0 = constraint_drift(&initial.x, &grid);
    if drift0 > config.constraint_tol {
        return Err(LabError::InvalidParameter(format!("initial constraint drift {drift0:e}")));
    }
    let g = config.g();
    let (count, spacing) = config.snapshot_layout();
    let mut state = initial.clone();
    record.snapshots.push(snapshot(state.clone(), &g, &grid)?);
    for k in 1..=count {
        let target = k as f64 * spacing;
        let dt_target = match config.dt {
            DtPolicy::Fixed(dt) => dt,
            DtPolicy::Cfl(safety) => cfl_dt(&record.snapshots.last().unwrap().tension, &grid, safety),
        };
        let span = target - state.t;
        let nsub = ((span / dt_target) - 1e-9).ceil().max(1.0) as usize;
        let dt = span / nsub as f64;
        for _ in 0..nsub {
            let (next, margin) = step_with_margin(&state, &g, dt, &grid, config.constraint)?;
            if margin < -config.collapse_tol {
                return Err(LabError::StabilityCollapse { t: state.t, margin });
            }
            record.max_step_drift = record.max_step_drift.max(constraint_drift(&next.x, &grid));
            record.steps += 1;
            state = next;
        }
        state.t = target;
        record.snapshots.push(snapshot(state.clone(), &g, &grid)?);
    }
    Ok(())
}

/// L² norm of the residual of the differentiated tension equation at each
/// interior snapshot, with (y, ν) = (ẍ, τ̈) formed by central time differences.
pub fn quasilinear_residual(record: &TrajectoryRecord, grid: &Grid) -> Result<Vec<(f64, f64)>> {
    use crate::diagnostics::TimeJet;
    use crate::norms::l2_norm;

    let snaps = &record.snapshots;
    if snaps.len() < 5 {
        return Err(LabError::InsufficientSnapshots { needed: 5, found: snaps.len() });
    }
    let ops = DiffOps::default();
    let mut out = Vec::new();
    for c in 2..snaps.len() - 2 {
        let jet = TimeJet::from_window(&snaps[c - 2..=c + 2])?;
        let x = &snaps[c].state.x;
        let tau = &snaps[c].tension.tau;
        let xss = ops.d2(x, grid)?;
        let xd_s = ops.d1(&jet.x1, grid)?;
        let xd_ss = ops.d2(&jet.x1, grid)?;
        let xdd_s = ops.d1(&jet.x2, grid)?;
        let yd_s = ops.d1(&jet.x3, grid)?;
        let y_ss = ops.d2(&jet.x2, grid)?;
        let nu_ss = ops.d2(&jet.tau2, grid)?;
        let res: Vec<f64> = (0..grid.len())
            .map(|i| {
                let h = 2.0
                    * (xdd_s[i].norm_squared() - xd_ss[i].norm_squared() * tau[i]
                        - 2.0 * xss[i].dot(&xd_ss[i]) * jet.tau1[i]);
                let rhs = 2.0 * xd_s[i].dot(&yd_s[i]) - 2.0 * xss[i].dot(&y_ss[i]) * tau[i] + h;
                -nu_ss[i] + xss[i].norm_squared() * jet.tau2[i] - rhs
            })
            .collect();
        out.push((snaps[c].state.t, l2_norm(&res, grid)));
    }
    Ok(out)
}
