//! Energy functionals, free-end mode analysis and the convergence harness.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{tension_divergence, Snapshot, TrajectoryRecord};
use crate::error::{LabError, Result};
use crate::grid::{trapezoid, DiffOps, Grid};
use crate::norms::xm_norm;
use crate::tension::solve_phi;
use crate::Vec3;

pub const WINDOW: usize = 5;

/// Central time differences over five uniformly spaced snapshots, taken at the middle one.
#[derive(Clone, Debug)]
pub struct TimeJet {
    pub dt: f64,
    pub x1: Vec<Vec3>,
    pub x2: Vec<Vec3>,
    pub x3: Vec<Vec3>,
    pub x4: Vec<Vec3>,
    pub tau1: Vec<f64>,
    pub tau2: Vec<f64>,
}

impl TimeJet {
    pub fn from_window(window: &[Snapshot]) -> Result<Self> {
        if window.len() != WINDOW {
            return Err(LabError::InsufficientSnapshots { needed: WINDOW, found: window.len() });
        }
        let t: Vec<f64> = window.iter().map(|s| s.state.t).collect();
        let dt = (t[4] - t[0]) / 4.0;
        if !(dt > 0.0) || t.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1.0)) {
            return Err(LabError::NonUniformSnapshots);
        }
        let x: Vec<&Vec<Vec3>> = window.iter().map(|s| &s.state.x).collect();
        let tau: Vec<&Vec<f64>> = window.iter().map(|s| &s.tension.tau).collect();
        let n = x[0].len();
        let (d1, d2, d3, d4) = (1.0 / (2.0 * dt), 1.0 / (dt * dt), 1.0 / (2.0 * dt.powi(3)), 1.0 / dt.powi(4));
        Ok(TimeJet {
            dt,
            x1: (0..n).map(|i| (x[3][i] - x[1][i]) * d1).collect(),
            x2: (0..n).map(|i| (x[3][i] - x[2][i] * 2.0 + x[1][i]) * d2).collect(),
            x3: (0..n)
                .map(|i| (x[4][i] - x[3][i] * 2.0 + x[1][i] * 2.0 - x[0][i]) * d3)
                .collect(),
            x4: (0..n)
                .map(|i| (x[4][i] - x[3][i] * 4.0 + x[2][i] * 6.0 - x[1][i] * 4.0 + x[0][i]) * d4)
                .collect(),
            tau1: (0..n).map(|i| (tau[3][i] - tau[1][i]) * d1).collect(),
            tau2: (0..n).map(|i| (tau[3][i] - 2.0 * tau[2][i] + tau[1][i]) * d2).collect(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReadout {
    pub t: f64,
    #[serde(rename = "E")]
    pub big_e: f64,
    pub script_e: f64,
}

fn dot_field(a: &[Vec3], b: &[Vec3], grid: &Grid) -> f64 {
    let vals: Vec<f64> = a.iter().zip(b).map(|(p, q)| p.dot(q)).collect();
    trapezoid(&vals, grid)
}

/// (τẏ', ẏ') + ‖(τy')'‖² + 2((τy')', f) − (φ'/φ)ν² at s = 1,
/// with y = ẍ, ν = τ̈ and f = 2(τ̇ẋ')'.
pub fn script_energy(window: &[Snapshot], grid: &Grid) -> Result<f64> {
    let jet = TimeJet::from_window(window)?;
    let center = &window[2];
    let tau = &center.tension.tau;
    let ops = DiffOps::default();
    let yd_s = ops.d1(&jet.x3, grid)?;
    let kinetic: Vec<f64> = yd_s.iter().zip(tau).map(|(w, t)| t * w.norm_squared()).collect();
    let ty = tension_divergence(tau, &jet.x2, grid)?;
    let f: Vec<Vec3> = tension_divergence(&jet.tau1, &jet.x1, grid)?
        .into_iter()
        .map(|w| w * 2.0)
        .collect();
    let q: Vec<f64> = ops.d2(&center.state.x, grid)?.iter().map(|w| w.norm_squared()).collect();
    let phi = solve_phi(&q, grid)?;
    let n = grid.n_cells();
    let boundary = phi.dphi[n] / phi.phi[n] * jet.tau2[n] * jet.tau2[n];
    Ok(trapezoid(&kinetic, grid) + dot_field(&ty, &ty, grid) + 2.0 * dot_field(&ty, &f, grid) - boundary)
}

/// ‖∂_t⁴x‖²_{X¹} + ‖∂_t³x‖²_{X²} at the window centre.
pub fn big_energy(window: &[Snapshot], grid: &Grid) -> Result<f64> {
    let jet = TimeJet::from_window(window)?;
    Ok(xm_norm(&jet.x4, 1, grid)?.powi(2) + xm_norm(&jet.x3, 2, grid)?.powi(2))
}

/// Energies at every snapshot with two neighbours on each side.
pub fn energy_series(record: &TrajectoryRecord, grid: &Grid) -> Result<Vec<EnergyReadout>> {
    let snaps = &record.snapshots;
    if snaps.len() < WINDOW {
        return Err(LabError::InsufficientSnapshots { needed: WINDOW, found: snaps.len() });
    }
    (2..snaps.len() - 2)
        .map(|c| {
            let w = &snaps[c - 2..=c + 2];
            Ok(EnergyReadout { t: snaps[c].state.t, big_e: big_energy(w, grid)?, script_e: script_energy(w, grid)? })
        })
        .collect()
}

pub fn fill_energies(record: &mut TrajectoryRecord, grid: &Grid) {
    if let Ok(series) = energy_series(record, grid) {
        for (k, e) in series.into_iter().enumerate() {
            let snap = &mut record.snapshots[k + 2];
            snap.big_e = Some(e.big_e);
            snap.script_e = Some(e.script_e);
        }
    }
}

/// max over t > t0 of |𝓔(t) − 𝓔(t0)|/(t − t0), t0 the first available time.
pub fn lipschitz_quotient(series: &[EnergyReadout]) -> f64 {
    let Some(first) = series.first() else { return 0.0 };
    series[1..]
        .iter()
        .map(|e| (e.script_e - first.script_e).abs() / (e.t - first.t))
        .fold(0.0, f64::max)
}

/// Free-end value of one position component per snapshot.
pub fn free_end_signal(record: &TrajectoryRecord, component: usize) -> (Vec<f64>, Vec<f64>) {
    record.snapshots.iter().map(|s| (s.state.t, s.state.x[0][component])).unzip()
}

/// Angular frequency from zero-crossing timing.
pub fn mode_frequency(times: &[f64], signal: &[f64]) -> Result<f64> {
    if times.len() != signal.len() {
        return Err(LabError::LengthMismatch { expected: times.len(), found: signal.len() });
    }
    let amp = signal.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if !(amp > 1e-14) {
        return Err(LabError::NoOscillation);
    }
    let mut crossings = Vec::new();
    for i in 0..signal.len().saturating_sub(1) {
        let (a, b) = (signal[i], signal[i + 1]);
        if (a < 0.0 && b >= 0.0) || (a > 0.0 && b <= 0.0) {
            if b == 0.0 {
                crossings.push(times[i + 1]);
            } else {
                crossings.push(times[i] + (times[i + 1] - times[i]) * a / (a - b));
            }
        }
    }
    crossings.dedup();
    if crossings.len() < 3 {
        return Err(LabError::NoOscillation);
    }
    let k = crossings.len() as f64;
    let mean_i = (k - 1.0) / 2.0;
    let mean_t = crossings.iter().sum::<f64>() / k;
    let (mut num, mut den) = (0.0, 0.0);
    for (i, t) in crossings.iter().enumerate() {
        let di = i as f64 - mean_i;
        num += di * (t - mean_t);
        den += di * di;
    }
    let half_period = num / den;
    let duration = times[times.len() - 1] - times[0];
    if duration < 3.0 * 2.0 * half_period {
        return Err(LabError::InvalidParameter(format!(
            "record spans {duration}, shorter than three periods of {}",
            2.0 * half_period
        )));
    }
    Ok(std::f64::consts::PI / half_period)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub error: f64,
    /// Observed order against the previous row.
    pub order: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of log(error) against log(n), negated.
    pub slope: Option<f64>,
    /// Every error sits at round-off level.
    pub floor: bool,
    pub monotone: bool,
}

impl ConvergenceTable {
    pub fn slope_label(&self) -> String {
        match (self.floor, self.slope) {
            (true, _) => "floor".to_string(),
            (false, Some(p)) => format!("{p:.3}"),
            (false, None) => "n/a".to_string(),
        }
    }
}

pub const FLOOR: f64 = 1e-12;

/// Evaluate `metric` at each resolution and fit the observed order.
pub fn convergence_study<F>(resolutions: &[usize], jobs: usize, metric: F) -> Result<ConvergenceTable>
where
    F: Fn(usize) -> Result<f64> + Sync,
{
    let errors: Vec<f64> = if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| LabError::InvalidParameter(e.to_string()))?;
        pool.install(|| resolutions.par_iter().map(|&n| metric(n)).collect::<Result<Vec<_>>>())?
    } else {
        resolutions.iter().map(|&n| metric(n)).collect::<Result<Vec<_>>>()?
    };
    Ok(tabulate(resolutions, &errors))
}

pub fn tabulate(resolutions: &[usize], errors: &[f64]) -> ConvergenceTable {
    let rows: Vec<ConvergenceRow> = resolutions
        .iter()
        .zip(errors)
        .enumerate()
        .map(|(k, (&n, &error))| {
            let order = (k > 0).then(|| {
                (errors[k - 1] / error).ln() / (n as f64 / resolutions[k - 1] as f64).ln()
            });
            ConvergenceRow { n, error, order }
        })
        .collect();
    let floor = errors.iter().all(|e| e.abs() <= FLOOR);
    let monotone = errors.windows(2).all(|w| w[1] <= w[0]);
    let slope = if floor || errors.len() < 2 || errors.iter().any(|e| !(*e > 0.0)) {
        None
    } else {
        let pts: Vec<(f64, f64)> = resolutions
            .iter()
            .zip(errors)
            .map(|(&n, &e)| ((n as f64).ln(), e.ln()))
            .collect();
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let num: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let den: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        Some(-num / den)
    };
    ConvergenceTable { rows, slope, floor, monotone }
}
