//! CSV and JSON persistence for states, tension fields, jets, data files and trajectories.
//!
//! Floats are written in shortest round-trip exponent form, so reading a file back
//! reproduces the in-memory values bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::compat::InitialDataJet;
use crate::dynamics::{ScenarioConfig, TrajectoryRecord};
use crate::error::{LabError, Result};
use crate::grid::{Grid, StringState};
use crate::tension::TensionField;
use crate::Vec3;

pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:e}")
    }
}

fn opt(v: Option<f64>) -> String {
    fmt_f64(v.unwrap_or(f64::NAN))
}

pub fn state_csv(state: &StringState, grid: &Grid) -> String {
    let mut out = String::from("s,x1,x2,x3,v1,v2,v3\n");
    for i in 0..grid.len() {
        let (x, v) = (state.x[i], state.v[i]);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt_f64(grid.node(i)),
            fmt_f64(x[0]),
            fmt_f64(x[1]),
            fmt_f64(x[2]),
            fmt_f64(v[0]),
            fmt_f64(v[1]),
            fmt_f64(v[2])
        );
    }
    out
}

pub fn tension_csv(tf: &TensionField, grid: &Grid) -> String {
    let mut out = String::from("s,tau,tau_prime\n");
    for i in 0..grid.len() {
        let _ = writeln!(out, "{},{},{}", fmt_f64(grid.node(i)), fmt_f64(tf.tau[i]), fmt_f64(tf.tau_prime[i]));
    }
    out
}

pub fn data_csv(x0: &[Vec3], x1: &[Vec3], grid: &Grid) -> String {
    let mut out = String::from("s,x0_1,x0_2,x0_3,x1_1,x1_2,x1_3\n");
    for i in 0..grid.len() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt_f64(grid.node(i)),
            fmt_f64(x0[i][0]),
            fmt_f64(x0[i][1]),
            fmt_f64(x0[i][2]),
            fmt_f64(x1[i][0]),
            fmt_f64(x1[i][1]),
            fmt_f64(x1[i][2])
        );
    }
    out
}

/// Rows of a seven-column numeric CSV with header.
fn read_seven_columns(path: &Path, header: &[&str; 7]) -> Result<Vec<[f64; 7]>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let found: Vec<String> = reader.headers()?.iter().map(|h| h.to_string()).collect();
    if found.len() != 7 || found.iter().zip(header.iter()).any(|(a, b)| a != b) {
        return Err(LabError::Parse(format!(
            "{}: expected header {}, found {}",
            path.display(),
            header.join(","),
            found.join(",")
        )));
    }
    let mut rows = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec?;
        let mut row = [0.0; 7];
        for (k, field) in rec.iter().enumerate().take(7) {
            row[k] = field.parse().map_err(|_| {
                LabError::Parse(format!("{}: line {}: bad number '{field}'", path.display(), line + 2))
            })?;
        }
        if rec.len() != 7 {
            return Err(LabError::Parse(format!("{}: line {}: expected 7 fields", path.display(), line + 2)));
        }
        rows.push(row);
    }
    Ok(rows)
}

fn grid_from_rows(rows: &[[f64; 7]], path: &Path) -> Result<Grid> {
    if rows.len() < 2 {
        return Err(LabError::Parse(format!("{}: too few rows", path.display())));
    }
    let grid = Grid::new(rows.len() - 1)?;
    for (i, r) in rows.iter().enumerate() {
        if (r[0] - grid.node(i)).abs() > 1e-9 {
            return Err(LabError::Parse(format!(
                "{}: line {}: s = {} is not on the uniform grid",
                path.display(),
                i + 2,
                r[0]
            )));
        }
    }
    Ok(grid)
}

pub fn read_state_csv(path: &Path, t: f64) -> Result<(Grid, StringState)> {
    let rows = read_seven_columns(path, &["s", "x1", "x2", "x3", "v1", "v2", "v3"])?;
    let grid = grid_from_rows(&rows, path)?;
    let x = rows.iter().map(|r| Vec3::new(r[1], r[2], r[3])).collect();
    let v = rows.iter().map(|r| Vec3::new(r[4], r[5], r[6])).collect();
    Ok((grid, StringState { t, x, v }))
}

/// Initial data file with columns s, x0_1..x0_3, x1_1..x1_3.
pub fn read_data_csv(path: &Path) -> Result<(Grid, Vec<Vec3>, Vec<Vec3>)> {
    let rows = read_seven_columns(path, &["s", "x0_1", "x0_2", "x0_3", "x1_1", "x1_2", "x1_3"])?;
    let grid = grid_from_rows(&rows, path)?;
    let x0 = rows.iter().map(|r| Vec3::new(r[1], r[2], r[3])).collect();
    let x1 = rows.iter().map(|r| Vec3::new(r[4], r[5], r[6])).collect();
    Ok((grid, x0, x1))
}

/// Records every file written below a root directory.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(OutputDir { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, rel: &str, contents: &str) -> Result<PathBuf> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, contents)?;
        self.written.push(rel.to_string());
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<PathBuf> {
        let text = serde_json::to_string_pretty(value)?;
        self.write(rel, &(text + "\n"))
    }

    pub fn files(&self) -> &[String] {
        &self.written
    }
}

#[derive(Serialize)]
struct JetLevel {
    level: usize,
    file: String,
    has_tau: bool,
    residual: f64,
}

#[derive(Serialize)]
struct JetManifest<'a> {
    order: usize,
    n_cells: usize,
    gravity: [f64; 3],
    residuals: &'a [f64],
    levels: Vec<JetLevel>,
}

/// One CSV per jet level (s, x1, x2, x3, tau) plus `jet.json`.
pub fn write_jet(out: &mut OutputDir, jet: &InitialDataJet, g: &Vec3, grid: &Grid) -> Result<()> {
    let mut levels = Vec::new();
    for (j, xj) in jet.x_jet.iter().enumerate() {
        let tau = jet.tau_jet.get(j);
        let mut text = String::from("s,x1,x2,x3,tau\n");
        for i in 0..grid.len() {
            let _ = writeln!(
                text,
                "{},{},{},{},{}",
                fmt_f64(grid.node(i)),
                fmt_f64(xj[i][0]),
                fmt_f64(xj[i][1]),
                fmt_f64(xj[i][2]),
                opt(tau.map(|t| t[i]))
            );
        }
        let file = format!("jet_level_{j}.csv");
        out.write(&file, &text)?;
        levels.push(JetLevel { level: j, file, has_tau: tau.is_some(), residual: jet.residuals[j] });
    }
    let manifest = JetManifest {
        order: jet.order,
        n_cells: grid.n_cells(),
        gravity: [g[0], g[1], g[2]],
        residuals: &jet.residuals,
        levels,
    };
    out.write_json("jet.json", &manifest)?;
    Ok(())
}

#[derive(Serialize)]
struct SnapshotEntry {
    index: usize,
    t: f64,
    state: String,
    tension: String,
}

#[derive(Serialize)]
struct TrajectoryManifest<'a> {
    config: &'a ScenarioConfig,
    steps: usize,
    max_step_drift: f64,
    snapshots: Vec<SnapshotEntry>,
    diagnostics: &'a str,
}

pub fn diagnostics_csv(record: &TrajectoryRecord) -> String {
    let mut out = String::from("t,script_E,E,constraint_drift,stability_margin\n");
    for s in &record.snapshots {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_f64(s.state.t),
            opt(s.script_e),
            opt(s.big_e),
            fmt_f64(s.constraint_drift),
            fmt_f64(s.stability_margin)
        );
    }
    out
}

/// Two-column whitespace-separated series for gnuplot.
pub fn plot_columns(xs: &[f64], ys: &[f64]) -> String {
    let mut out = String::new();
    for (x, y) in xs.iter().zip(ys) {
        let _ = writeln!(out, "{} {}", fmt_f64(*x), fmt_f64(*y));
    }
    out
}

/// Snapshot CSVs, diagnostics, plot series and `trajectory.json`.
pub fn write_trajectory(out: &mut OutputDir, record: &TrajectoryRecord) -> Result<()> {
    let grid = record.grid()?;
    let mut entries = Vec::new();
    for (k, snap) in record.snapshots.iter().enumerate() {
        let state = format!("snapshots/state_{k:05}.csv");
        let tension = format!("snapshots/tension_{k:05}.csv");
        out.write(&state, &state_csv(&snap.state, &grid))?;
        out.write(&tension, &tension_csv(&snap.tension, &grid))?;
        entries.push(SnapshotEntry { index: k, t: snap.state.t, state, tension });
    }
    out.write("diagnostics.csv", &diagnostics_csv(record))?;

    let t = record.times();
    let col = |f: &dyn Fn(&crate::dynamics::Snapshot) -> f64| -> Vec<f64> { record.snapshots.iter().map(f).collect() };
    for (c, name) in ["x1", "x2", "x3"].iter().enumerate() {
        out.write(&format!("plots/free_end_{name}.dat"), &plot_columns(&t, &col(&|s| s.state.x[0][c])))?;
    }
    out.write("plots/stability_margin.dat", &plot_columns(&t, &col(&|s| s.stability_margin)))?;
    out.write("plots/constraint_drift.dat", &plot_columns(&t, &col(&|s| s.constraint_drift)))?;
    out.write("plots/script_E.dat", &plot_columns(&t, &col(&|s| s.script_e.unwrap_or(f64::NAN))))?;
    out.write("plots/E.dat", &plot_columns(&t, &col(&|s| s.big_e.unwrap_or(f64::NAN))))?;

    let manifest = TrajectoryManifest {
        config: &record.config,
        steps: record.steps,
        max_step_drift: record.max_step_drift,
        snapshots: entries,
        diagnostics: "diagnostics.csv",
    };
    out.write_json("trajectory.json", &manifest)?;
    Ok(())
}
