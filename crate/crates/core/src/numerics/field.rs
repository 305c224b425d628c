use rayon::prelude::*;

use super::grid::{GeometryMode, Grid, Point};
use crate::error::{Error, Result};

/// Scalar values sampled on a [`Grid`], row-major in plane mode.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Field> {
        if values.len() != grid.len() {
            return Err(Error::Domain(format!(
                "field has {} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite value at node {i}")));
        }
        Ok(Field { grid, values })
    }

    pub fn constant(grid: Grid, value: f64) -> Field {
        Field { grid, values: vec![value; grid.len()] }
    }

    /// Samples `f` at every node. The map runs in parallel; each value depends
    /// only on its own node, so the result is deterministic.
    pub fn from_fn<F>(grid: Grid, f: F) -> Field
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let values = (0..grid.len())
            .into_par_iter()
            .map(|idx| f(grid.point(idx).as_slice()))
            .collect();
        Field { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Discrete mass: trapezoidal weights in line mode, control-volume weights
    /// `∫ r^(N-1) dr` per node in radial mode, and the tensor trapezoid in plane
    /// mode. This is the quantity the Neumann diffusion step conserves.
    pub fn mass(&self) -> f64 {
        let g = &self.grid;
        let dx = g.dx();
        match g.mode() {
            GeometryMode::Line => {
                let n = self.values.len();
                self.values
                    .iter()
                    .enumerate()
                    .map(|(i, v)| if i == 0 || i + 1 == n { 0.5 * v } else { *v })
                    .sum::<f64>()
                    * dx
            }
            GeometryMode::Radial { dim } => {
                let vols = radial_volumes(g.nx(), dx, dim);
                self.values.iter().zip(&vols).map(|(v, w)| v * w).sum()
            }
            GeometryMode::Plane => {
                let (nx, ny) = (g.nx(), g.ny());
                let w = |i: usize, n: usize| if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
                let mut s = 0.0;
                for j in 0..ny {
                    for i in 0..nx {
                        s += w(i, nx) * w(j, ny) * self.values[g.index(i, j)];
                    }
                }
                s * dx * dx
            }
        }
    }

    /// Piecewise-linear interpolation (bilinear in plane mode); exact at nodes.
    pub fn interpolate(&self, x: &[f64]) -> Result<f64> {
        let g = &self.grid;
        if !g.contains(x) {
            return Err(Error::Domain(format!("point {x:?} outside grid extents")));
        }
        let dx = g.dx();
        // coordinates within 1e-9 cells of a node snap to it, so nodal values
        // come back bit-exact
        let locate = |v: f64, lo: f64, n: usize| -> (usize, f64) {
            let s = ((v - lo) / dx).max(0.0);
            let r = s.round();
            if (s - r).abs() < 1e-9 {
                let k = r as usize;
                return if k + 1 >= n { (n - 2, 1.0) } else { (k, 0.0) };
            }
            let i = (s.floor() as usize).min(n - 2);
            (i, (s - i as f64).clamp(0.0, 1.0))
        };
        let xa = g.x_axis();
        let (i, fx) = locate(x[0], xa.lo, xa.n);
        match g.mode() {
            GeometryMode::Plane => {
                let ya = g.y_axis().unwrap();
                let (j, fy) = locate(x[1], ya.lo, ya.n);
                if fx == 0.0 && fy == 0.0 {
                    return Ok(self.values[g.index(i, j)]);
                }
                let v00 = self.values[g.index(i, j)];
                let v10 = self.values[g.index(i + 1, j)];
                let v01 = self.values[g.index(i, j + 1)];
                let v11 = self.values[g.index(i + 1, j + 1)];
                Ok((1.0 - fy) * ((1.0 - fx) * v00 + fx * v10) + fy * ((1.0 - fx) * v01 + fx * v11))
            }
            _ => {
                if fx == 0.0 {
                    return Ok(self.values[i]);
                }
                if fx == 1.0 {
                    return Ok(self.values[i + 1]);
                }
                Ok((1.0 - fx) * self.values[i] + fx * self.values[i + 1])
            }
        }
    }

    /// Interpolates at a [`Point`].
    pub fn at(&self, p: Point) -> Result<f64> {
        self.interpolate(p.as_slice())
    }
}

/// Control volumes `∫ r^(N-1) dr` (without the sphere area factor) of the
/// radial cells `[r_i - dr/2, r_i + dr/2] ∩ [0, r_max]`.
pub(crate) fn radial_volumes(n: usize, dr: f64, dim: u32) -> Vec<f64> {
    let nd = dim as i32;
    let p = |r: f64| r.powi(nd) / dim as f64;
    (0..n)
        .map(|i| {
            let r = i as f64 * dr;
            let lo = (r - 0.5 * dr).max(0.0);
            let hi = if i + 1 == n { r } else { r + 0.5 * dr };
            p(hi) - p(lo)
        })
        .collect()
}

/// Areas `r^(N-1)` of the faces `r_{i+1/2}`, `i = 0..n-1`.
pub(crate) fn radial_faces(n: usize, dr: f64, dim: u32) -> Vec<f64> {
    (0..n - 1).map(|i| ((i as f64 + 0.5) * dr).powi(dim as i32 - 1)).collect()
}
