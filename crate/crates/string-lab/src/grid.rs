//! Uniform arc-length grid, string states and finite-difference operators.
//!
//! Node 0 is the free end s = 0, the last node is the fixed end s = 1.

use std::ops::{Add, Mul, Sub};

use crate::error::{LabError, Result};
use crate::Vec3;

pub const MIN_CELLS: usize = 8;

/// Values that can live on grid nodes.
pub trait FieldValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn norm_sq(&self) -> f64;
    fn is_finite_value(&self) -> bool;
}

impl FieldValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn norm_sq(&self) -> f64 {
        self * self
    }
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl FieldValue for Vec3 {
    fn zero() -> Self {
        Vec3::zeros()
    }
    fn norm_sq(&self) -> f64 {
        self.norm_squared()
    }
    fn is_finite_value(&self) -> bool {
        self.iter().all(|c| c.is_finite())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    n_cells: usize,
}

impl Grid {
    pub fn new(n_cells: usize) -> Result<Self> {
        if n_cells < MIN_CELLS {
            return Err(LabError::GridTooCoarse { n_cells, min: MIN_CELLS });
        }
        Ok(Grid { n_cells })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.n_cells + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n_cells as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        i as f64 / self.n_cells as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }

    pub fn midpoints(&self) -> Vec<f64> {
        (0..self.n_cells)
            .map(|i| (i as f64 + 0.5) / self.n_cells as f64)
            .collect()
    }

    pub fn check_len<T>(&self, field: &[T]) -> Result<()> {
        if field.len() != self.len() {
            return Err(LabError::LengthMismatch { expected: self.len(), found: field.len() });
        }
        Ok(())
    }

    pub fn sample<T, F: Fn(f64) -> T>(&self, f: F) -> Vec<T> {
        self.nodes().into_iter().map(f).collect()
    }
}

pub fn make_grid(n_cells: usize) -> Result<Grid> {
    Grid::new(n_cells)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DiffOps {
    order: usize,
}

impl Default for DiffOps {
    fn default() -> Self {
        DiffOps { order: 2 }
    }
}

const D1_O2_EDGE: [f64; 3] = [-3.0, 4.0, -1.0];
const D2_O2_EDGE: [f64; 4] = [2.0, -5.0, 4.0, -1.0];
const D1_O4_EDGE: [[f64; 5]; 2] = [[-25.0, 48.0, -36.0, 16.0, -3.0], [-3.0, -10.0, 18.0, -6.0, 1.0]];
const D2_O4_EDGE: [[f64; 6]; 2] = [
    [45.0, -154.0, 214.0, -156.0, 61.0, -10.0],
    [10.0, -15.0, -4.0, 14.0, -6.0, 1.0],
];

fn left<T: FieldValue>(u: &[T], coeffs: &[f64]) -> T {
    coeffs.iter().enumerate().fold(T::zero(), |acc, (k, &c)| acc + u[k] * c)
}

fn right<T: FieldValue>(u: &[T], coeffs: &[f64]) -> T {
    let n = u.len() - 1;
    coeffs.iter().enumerate().fold(T::zero(), |acc, (k, &c)| acc + u[n - k] * c)
}

impl DiffOps {
    pub fn new(order: usize) -> Result<Self> {
        match order {
            2 | 4 => Ok(DiffOps { order }),
            _ => Err(LabError::OutOfRange { what: "stencil order", value: order.to_string() }),
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn d1<T: FieldValue>(&self, field: &[T], grid: &Grid) -> Result<Vec<T>> {
        grid.check_len(field)?;
        let n = grid.n_cells();
        let h = grid.h();
        let u = field;
        let mut out = vec![T::zero(); n + 1];
        match self.order {
            2 => {
                let c = 1.0 / (2.0 * h);
                out[0] = left(u, &D1_O2_EDGE) * c;
                out[n] = right(u, &D1_O2_EDGE) * (-c);
                for i in 1..n {
                    out[i] = (u[i + 1] - u[i - 1]) * c;
                }
            }
            _ => {
                let c = 1.0 / (12.0 * h);
                out[0] = left(u, &D1_O4_EDGE[0]) * c;
                out[n] = right(u, &D1_O4_EDGE[0]) * (-c);
                out[1] = left(u, &D1_O4_EDGE[1]) * c;
                out[n - 1] = right(u, &D1_O4_EDGE[1]) * (-c);
                for i in 2..n - 1 {
                    out[i] = (u[i - 2] - u[i - 1] * 8.0 + u[i + 1] * 8.0 - u[i + 2]) * c;
                }
            }
        }
        Ok(out)
    }

    pub fn d2<T: FieldValue>(&self, field: &[T], grid: &Grid) -> Result<Vec<T>> {
        grid.check_len(field)?;
        let n = grid.n_cells();
        let h = grid.h();
        let u = field;
        let mut out = vec![T::zero(); n + 1];
        match self.order {
            2 => {
                let c = 1.0 / (h * h);
                out[0] = left(u, &D2_O2_EDGE) * c;
                out[n] = right(u, &D2_O2_EDGE) * c;
                for i in 1..n {
                    out[i] = (u[i + 1] - u[i] * 2.0 + u[i - 1]) * c;
                }
            }
            _ => {
                let c = 1.0 / (12.0 * h * h);
                out[0] = left(u, &D2_O4_EDGE[0]) * c;
                out[1] = left(u, &D2_O4_EDGE[1]) * c;
                out[n] = right(u, &D2_O4_EDGE[0]) * c;
                out[n - 1] = right(u, &D2_O4_EDGE[1]) * c;
                for i in 2..n - 1 {
                    out[i] = (u[i - 1] * 16.0 - u[i - 2] - u[i] * 30.0 + u[i + 1] * 16.0 - u[i + 2]) * c;
                }
            }
        }
        Ok(out)
    }
}

pub fn d1<T: FieldValue>(field: &[T], grid: &Grid, ops: &DiffOps) -> Result<Vec<T>> {
    ops.d1(field, grid)
}

pub fn d2<T: FieldValue>(field: &[T], grid: &Grid, ops: &DiffOps) -> Result<Vec<T>> {
    ops.d2(field, grid)
}

/// Finite-difference weights for the `order`-th derivative at `z` from nodes `x` (Fornberg).
pub fn fd_weights(z: f64, x: &[f64], order: usize) -> Vec<f64> {
    let n = x.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] *= c4 / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

/// Second-order approximation of the p-th derivative from a single stencil per node.
///
/// Interior nodes use the narrowest symmetric stencil; nodes near either end use
/// p + 2 consecutive points flush with the boundary.
pub fn derivative<T: FieldValue>(field: &[T], p: usize, grid: &Grid) -> Result<Vec<T>> {
    grid.check_len(field)?;
    if p == 0 {
        return Ok(field.to_vec());
    }
    let n = grid.n_cells();
    let half = p.div_ceil(2);
    let width = p + 2;
    if width > n + 1 {
        return Err(LabError::GridTooCoarse { n_cells: n, min: width - 1 });
    }
    let scale = grid.h().powi(-(p as i32));
    let offsets = |lo: isize, len: usize| -> Vec<f64> { (0..len).map(|k| (lo + k as isize) as f64).collect() };
    let centred = fd_weights(0.0, &offsets(-(half as isize), 2 * half + 1), p);
    let apply = |start: usize, w: &[f64]| -> T {
        w.iter().enumerate().fold(T::zero(), |acc, (k, &c)| acc + field[start + k] * (c * scale))
    };
    let mut out = vec![T::zero(); n + 1];
    for (i, o) in out.iter_mut().enumerate() {
        if i >= half && i + half <= n {
            *o = apply(i - half, &centred);
        } else if i < half {
            *o = apply(0, &fd_weights(i as f64, &offsets(0, width), p));
        } else {
            let start = n + 1 - width;
            *o = apply(start, &fd_weights((i - start) as f64, &offsets(0, width), p));
        }
    }
    Ok(out)
}

/// Composite trapezoid rule over [0, 1].
pub fn trapezoid(values: &[f64], grid: &Grid) -> f64 {
    let n = values.len() - 1;
    let inner: f64 = values[1..n].iter().sum();
    grid.h() * (inner + 0.5 * (values[0] + values[n]))
}

/// Running trapezoid integral from s = 0.
pub fn cumulative_from_zero<T: FieldValue>(u: &[T], grid: &Grid) -> Vec<T> {
    let h = grid.h();
    let mut out = Vec::with_capacity(u.len());
    let mut acc = T::zero();
    out.push(acc);
    for w in u.windows(2) {
        acc = acc + (w[0] + w[1]) * (0.5 * h);
        out.push(acc);
    }
    out
}

/// U(s) = -∫_s^1 u by trapezoid, so U(1) = 0 and U' = u.
pub fn integrate_from_fixed_end<T: FieldValue>(u: &[T], grid: &Grid) -> Vec<T> {
    let h = grid.h();
    let n = u.len() - 1;
    let mut out = vec![T::zero(); n + 1];
    for i in (0..n).rev() {
        out[i] = out[i + 1] - (u[i] + u[i + 1]) * (0.5 * h);
    }
    out
}

/// Cell difference quotients (x_{i+1} - x_i)/h, one per cell.
pub fn edge_derivative<T: FieldValue>(x: &[T], grid: &Grid) -> Vec<T> {
    let inv = 1.0 / grid.h();
    x.windows(2).map(|w| (w[1] - w[0]) * inv).collect()
}

/// Rebuild nodal values from cell derivatives, pinning the fixed end to zero.
pub fn integrate_edges<T: FieldValue>(edges: &[T], grid: &Grid) -> Vec<T> {
    let h = grid.h();
    let n = edges.len();
    let mut out = vec![T::zero(); n + 1];
    for i in (0..n).rev() {
        out[i] = out[i + 1] - edges[i] * h;
    }
    out
}

pub fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

pub fn check_finite<T: FieldValue>(field: &[T], what: &str) -> Result<()> {
    if field.iter().all(|v| v.is_finite_value()) {
        Ok(())
    } else {
        Err(LabError::NonFinite(what.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StringState {
    pub t: f64,
    pub x: Vec<Vec3>,
    pub v: Vec<Vec3>,
}

impl StringState {
    pub fn new(t: f64, x: Vec<Vec3>, v: Vec<Vec3>, grid: &Grid) -> Result<Self> {
        grid.check_len(&x)?;
        grid.check_len(&v)?;
        Ok(StringState { t, x, v })
    }

    pub fn fixed_end_offset(&self) -> f64 {
        self.x.last().map(|p| p.norm()).unwrap_or(0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite()
            && self.x.iter().all(|p| p.is_finite_value())
            && self.v.iter().all(|p| p.is_finite_value())
    }
}

/// max over cells of | |x_{i+1} - x_i|/h - 1 |.
pub fn constraint_drift(x: &[Vec3], grid: &Grid) -> f64 {
    edge_derivative(x, grid)
        .iter()
        .fold(0.0_f64, |m, e| m.max((e.norm() - 1.0).abs()))
}
