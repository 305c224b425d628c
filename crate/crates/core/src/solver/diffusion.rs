//! Crank–Nicolson diffusion with Neumann boundaries.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{radial_faces, radial_volumes, Field, GeometryMode, Grid, Tridiagonal, TridiagonalLu};

/// Largest `r = ε·dt/dx²` for which the explicit half of the scheme has
/// nonnegative coefficients, so the step is monotone and keeps `u ≥ 0`.
pub fn max_mesh_ratio(grid: &Grid) -> f64 {
    match grid.mode() {
        GeometryMode::Radial { dim } => {
            // the origin row carries 2N(u₁ − u₀)/dr²; every other row is weaker
            let (lap, _) = radial_laplacian(grid.nx(), dim);
            let worst = lap.diag.iter().fold(0.0f64, |m, d| m.max(-d));
            2.0 / worst
        }
        _ => 1.0,
    }
}

/// Default time step: `min(dx/2, r_max·dx²/ε)`.
pub fn default_dt(grid: &Grid, epsilon: f64) -> f64 {
    let dx = grid.dx();
    (0.5 * dx).min(max_mesh_ratio(grid) * dx * dx / epsilon)
}

/// `dx²·Δ` on `n` nodes with ghost-node Neumann ends.
fn line_laplacian(n: usize) -> Tridiagonal {
    let mut lower = vec![1.0; n - 1];
    let mut upper = vec![1.0; n - 1];
    upper[0] = 2.0;
    lower[n - 2] = 2.0;
    Tridiagonal { lower, diag: vec![-2.0; n], upper }
}

/// `dr²·Δ` for radial functions, in finite-volume form. Returns the operator
/// and the control volumes (whose weighted sum it conserves).
fn radial_laplacian(n: usize, dim: u32) -> (Tridiagonal, Vec<f64>) {
    // unit spacing: all entries scale like 1/dr²
    let vol = radial_volumes(n, 1.0, dim);
    let face = radial_faces(n, 1.0, dim);
    let mut lower = vec![0.0; n - 1];
    let mut upper = vec![0.0; n - 1];
    let mut diag = vec![0.0; n];
    for i in 0..n {
        if i + 1 < n {
            upper[i] = face[i] / vol[i];
            diag[i] -= face[i] / vol[i];
        }
        if i > 0 {
            lower[i - 1] = face[i - 1] / vol[i];
            diag[i] -= face[i - 1] / vol[i];
        }
    }
    (Tridiagonal { lower, diag, upper }, vol)
}

/// `I + a·L`.
fn shifted(lap: &Tridiagonal, a: f64) -> Tridiagonal {
    Tridiagonal {
        lower: lap.lower.iter().map(|v| a * v).collect(),
        // at the monotonicity bound the diagonal vanishes up to roundoff
        diag: lap.diag.iter().map(|v| 1.0 + a * v).map(|d| if d.abs() < 1e-12 { 0.0 } else { d }).collect(),
        upper: lap.upper.iter().map(|v| a * v).collect(),
    }
}

#[derive(Clone, Debug)]
enum Kind {
    /// One implicit solve per step (line and radial modes).
    Single { explicit: Tridiagonal, implicit: TridiagonalLu },
    /// Peaceman–Rachford: `(I − aLx)u* = (I + aLy)uⁿ`, `(I − aLy)uⁿ⁺¹ = (I + aLx)u*`.
    Adi { ex_x: Tridiagonal, ex_y: Tridiagonal, im_x: TridiagonalLu, im_y: TridiagonalLu },
}

/// Factored diffusion step for a fixed grid, `ε` and `dt`.
#[derive(Clone, Debug)]
pub struct DiffusionOp {
    grid: Grid,
    dt: f64,
    kind: Kind,
}

impl DiffusionOp {
    pub fn new(grid: &Grid, epsilon: f64, dt: f64) -> Result<DiffusionOp> {
        if !(dt > 0.0) || !(epsilon > 0.0) {
            return Err(Error::Domain(format!("diffusion needs dt, epsilon > 0, got {dt}, {epsilon}")));
        }
        let r = epsilon * dt / (grid.dx() * grid.dx());
        let kind = match grid.mode() {
            GeometryMode::Line => {
                let lap = line_laplacian(grid.nx());
                Kind::Single { explicit: shifted(&lap, 0.5 * r), implicit: shifted(&lap, -0.5 * r).factor()? }
            }
            GeometryMode::Radial { dim } => {
                let (lap, _) = radial_laplacian(grid.nx(), dim);
                Kind::Single { explicit: shifted(&lap, 0.5 * r), implicit: shifted(&lap, -0.5 * r).factor()? }
            }
            GeometryMode::Plane => {
                let lx = line_laplacian(grid.nx());
                let ly = line_laplacian(grid.ny());
                Kind::Adi {
                    ex_x: shifted(&lx, 0.5 * r),
                    ex_y: shifted(&ly, 0.5 * r),
                    im_x: shifted(&lx, -0.5 * r).factor()?,
                    im_y: shifted(&ly, -0.5 * r).factor()?,
                }
            }
        };
        Ok(DiffusionOp { grid: *grid, dt, kind })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances `values` (laid out on the operator's grid) by `dt`.
    pub fn apply(&self, values: &mut [f64]) {
        match &self.kind {
            Kind::Single { explicit, implicit } => {
                let mut rhs = vec![0.0; values.len()];
                explicit.apply_into(values, &mut rhs);
                implicit.solve_in_place(&mut rhs);
                values.copy_from_slice(&rhs);
            }
            Kind::Adi { ex_x, ex_y, im_x, im_y } => {
                let (nx, ny) = (self.grid.nx(), self.grid.ny());
                let mut half = vec![0.0; values.len()];
                // (I + aLy) along columns, row by row
                half.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
                    let d = ex_y.diag[j];
                    for (i, out) in row.iter_mut().enumerate() {
                        let mut s = d * values[j * nx + i];
                        if j > 0 {
                            s += ex_y.lower[j - 1] * values[(j - 1) * nx + i];
                        }
                        if j + 1 < ny {
                            s += ex_y.upper[j] * values[(j + 1) * nx + i];
                        }
                        *out = s;
                    }
                });
                half.par_chunks_mut(nx).for_each(|row| im_x.solve_in_place(row));
                // (I + aLx) along rows, written transposed
                let mut cols = vec![0.0; values.len()];
                let mut tmp_rows = vec![0.0; values.len()];
                tmp_rows.par_chunks_mut(nx).zip(half.par_chunks(nx)).for_each(|(out, row)| {
                    ex_x.apply_into(row, out);
                });
                transpose(&tmp_rows, &mut cols, nx, ny);
                cols.par_chunks_mut(ny).for_each(|col| im_y.solve_in_place(col));
                transpose(&cols, values, ny, nx);
            }
        }
    }
}

/// `dst[i*rows + j] = src[j*cols + i]` for a `rows × cols` row-major `src`.
fn transpose(src: &[f64], dst: &mut [f64], cols: usize, rows: usize) {
    dst.par_chunks_mut(rows).enumerate().for_each(|(i, out)| {
        for (j, v) in out.iter_mut().enumerate() {
            *v = src[j * cols + i];
        }
    });
}

/// One Crank–Nicolson step of `∂ₜu = εΔu`.
pub fn diffusion_substep(field: &Field, dt: f64, epsilon: f64) -> Result<Field> {
    let op = DiffusionOp::new(field.grid(), epsilon, dt)?;
    let mut values = field.values().to_vec();
    op.apply(&mut values);
    Field::new(*field.grid(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constants_are_steady() {
        for grid in [
            Grid::line(-1.0, 1.0, 0.01).unwrap(),
            Grid::radial(3, 1.0, 0.01).unwrap(),
            Grid::plane((0.0, 1.0), (0.0, 0.5), 0.01).unwrap(),
        ] {
            let f = Field::constant(grid, 0.7);
            let g = diffusion_substep(&f, 0.003, 0.05).unwrap();
            assert!(g.values().iter().all(|v| (v - 0.7).abs() < 1e-14));
        }
    }

    #[test]
    fn mass_is_conserved() {
        for grid in [
            Grid::line(-1.0, 1.0, 0.01).unwrap(),
            Grid::radial(2, 1.0, 0.01).unwrap(),
            Grid::radial(4, 1.0, 0.01).unwrap(),
            Grid::plane((0.0, 1.0), (0.0, 0.5), 0.01).unwrap(),
        ] {
            let mut f = Field::from_fn(grid, |x| (-20.0 * x.iter().map(|v| v * v).sum::<f64>()).exp());
            let m0 = f.mass();
            for _ in 0..50 {
                f = diffusion_substep(&f, 0.004, 0.02).unwrap();
            }
            assert!(((f.mass() - m0) / m0).abs() < 1e-12, "{:?}", grid.mode());
        }
    }

    #[test]
    fn fourier_mode_amplification() {
        let (l, dx, eps, dt) = (1.0, 0.01, 0.05, 0.002);
        let grid = Grid::line(0.0, l, dx).unwrap();
        for m in [1, 3, 17] {
            let k = m as f64 * PI / l;
            let f = Field::from_fn(grid, |x| (k * x[0]).cos());
            let g = diffusion_substep(&f, dt, eps).unwrap();
            let beta = eps * dt * (1.0 - (k * dx).cos()) / (dx * dx);
            let amp = (1.0 - beta) / (1.0 + beta);
            for (a, b) in f.values().iter().zip(g.values()) {
                assert!((b - amp * a).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn adi_separable_mode() {
        // products of Neumann modes are eigenvectors of both half-steps
        let grid = Grid::plane((0.0, 1.0), (0.0, 1.0), 0.02).unwrap();
        let (eps, dt, dx) = (0.05, 0.004, grid.dx());
        let (kx, ky) = (2.0 * PI, 3.0 * PI);
        let f = Field::from_fn(grid, |x| (kx * x[0]).cos() * (ky * x[1]).cos());
        let g = diffusion_substep(&f, dt, eps).unwrap();
        let b = |k: f64| eps * dt * (1.0 - (k * dx).cos()) / (dx * dx);
        let amp = (1.0 - b(kx)) / (1.0 + b(kx)) * (1.0 - b(ky)) / (1.0 + b(ky));
        for (a, v) in f.values().iter().zip(g.values()) {
            assert!((v - amp * a).abs() < 1e-12);
        }
    }

    #[test]
    fn radial_origin_row_and_bound() {
        let (lap, _) = radial_laplacian(10, 3);
        assert!((lap.diag[0] + 6.0).abs() < 1e-12 && (lap.upper[0] - 6.0).abs() < 1e-12);
        let grid = Grid::radial(3, 1.0, 0.1).unwrap();
        assert!((max_mesh_ratio(&grid) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(max_mesh_ratio(&Grid::line(0.0, 1.0, 0.1).unwrap()), 1.0);
    }

    #[test]
    fn radial_heat_kernel() {
        // u = exp(−r²/(4εt + s)) scaled so the Gaussian stays exact in N dims
        let (eps, dim) = (0.05, 3u32);
        let grid = Grid::radial(dim, 2.0, 0.005).unwrap();
        let s0 = 0.04;
        let exact = |t: f64| {
            let s = s0 + 4.0 * eps * t;
            Field::from_fn(grid, move |x| (s0 / s).powf(dim as f64 / 2.0) * (-x[0] * x[0] / s).exp())
        };
        let dt = default_dt(&grid, eps);
        let mut f = exact(0.0);
        let steps = 200;
        for _ in 0..steps {
            f = diffusion_substep(&f, dt, eps).unwrap();
        }
        let e = exact(steps as f64 * dt);
        let err = f.values().iter().zip(e.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 2e-4, "{err}");
    }

    #[test]
    fn positivity_at_the_bound() {
        let grid = Grid::line(0.0, 1.0, 0.01).unwrap();
        let mut f = Field::from_fn(grid, |x| if (x[0] - 0.5).abs() < 0.005 { 1.0 } else { 0.0 });
        let dt = default_dt(&grid, 0.05);
        for _ in 0..20 {
            f = diffusion_substep(&f, dt, 0.05).unwrap();
            assert!(f.min() >= 0.0);
        }
    }
}
