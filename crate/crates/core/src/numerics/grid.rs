use crate::error::{Error, Result};

/// How the grid coordinates map onto physical space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeometryMode {
    /// One space dimension, `x ∈ [lo, hi]`.
    Line,
    /// Radially symmetric functions in `dim` space dimensions, `r ∈ [0, r_max]`.
    Radial { dim: u32 },
    /// Two space dimensions on a Cartesian product grid.
    Plane,
}

impl GeometryMode {
    pub fn name(&self) -> &'static str {
        match self {
            GeometryMode::Line => "line",
            GeometryMode::Radial { .. } => "radial",
            GeometryMode::Plane => "plane",
        }
    }
}

/// Uniformly spaced nodes `lo, lo + dx, ..., hi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    #[inline]
    pub fn coord(&self, i: usize, dx: f64) -> f64 {
        if i + 1 == self.n {
            self.hi
        } else {
            self.lo + i as f64 * dx
        }
    }
}

/// A uniform grid in one of the three geometry modes.
///
/// The node count per axis is `extent / dx + 1`; when the extent is not an
/// integer multiple of the requested spacing the count is rounded up and the
/// spacing shrinks accordingly, so the effective `dx` never exceeds the
/// requested one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    mode: GeometryMode,
    x: Axis,
    y: Option<Axis>,
    dx: f64,
}

fn node_count(extent: f64, dx: f64) -> Result<(usize, f64)> {
    if !(dx > 0.0) || !dx.is_finite() {
        return Err(Error::Config(format!("grid spacing must be positive, got {dx}")));
    }
    if !(extent > 0.0) || !extent.is_finite() {
        return Err(Error::Config(format!("grid extent must be positive, got {extent}")));
    }
    let cells = (extent / dx - 1e-9).ceil().max(1.0) as usize;
    let n = cells + 1;
    if n < 3 {
        return Err(Error::Config(format!(
            "grid needs at least 3 points per axis (extent {extent}, dx {dx})"
        )));
    }
    Ok((n, extent / cells as f64))
}

impl Grid {
    pub fn line(lo: f64, hi: f64, dx: f64) -> Result<Grid> {
        let (n, dx) = node_count(hi - lo, dx)?;
        Ok(Grid { mode: GeometryMode::Line, x: Axis { lo, hi, n }, y: None, dx })
    }

    pub fn radial(dim: u32, r_max: f64, dx: f64) -> Result<Grid> {
        if dim < 2 {
            return Err(Error::Config(format!("radial mode needs dimension >= 2, got {dim}")));
        }
        let (n, dx) = node_count(r_max, dx)?;
        Ok(Grid { mode: GeometryMode::Radial { dim }, x: Axis { lo: 0.0, hi: r_max, n }, y: None, dx })
    }

    /// Square cells: the spacing is derived from the longer side and both axes
    /// must be integer multiples of it (up to rounding of the shorter side).
    pub fn plane(x: (f64, f64), y: (f64, f64), dx: f64) -> Result<Grid> {
        let (nx, dxx) = node_count(x.1 - x.0, dx)?;
        let cells_y = ((y.1 - y.0) / dxx).round() as usize;
        if cells_y < 2 || ((y.1 - y.0) - cells_y as f64 * dxx).abs() > 1e-9 * (y.1 - y.0) {
            return Err(Error::Config(format!(
                "plane grid: y extent {} is not a multiple of dx {dxx}",
                y.1 - y.0
            )));
        }
        Ok(Grid {
            mode: GeometryMode::Plane,
            x: Axis { lo: x.0, hi: x.1, n: nx },
            y: Some(Axis { lo: y.0, hi: y.1, n: cells_y + 1 }),
            dx: dxx,
        })
    }

    pub fn mode(&self) -> GeometryMode {
        self.mode
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn x_axis(&self) -> Axis {
        self.x
    }

    pub fn y_axis(&self) -> Option<Axis> {
        self.y
    }

    pub fn nx(&self) -> usize {
        self.x.n
    }

    pub fn ny(&self) -> usize {
        self.y.map_or(1, |a| a.n)
    }

    pub fn len(&self) -> usize {
        self.nx() * self.ny()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of coordinates of a point on this grid.
    pub fn point_dim(&self) -> usize {
        match self.mode {
            GeometryMode::Plane => 2,
            _ => 1,
        }
    }

    #[inline]
    pub fn x_coord(&self, i: usize) -> f64 {
        self.x.coord(i, self.dx)
    }

    #[inline]
    pub fn y_coord(&self, j: usize) -> f64 {
        self.y.expect("plane grid").coord(j, self.dx)
    }

    /// Row-major flat index; rows run along x.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.x.n + i
    }

    /// Coordinates of node `idx`. Radial nodes are reported as `[r]`.
    #[inline]
    pub fn point(&self, idx: usize) -> Point {
        match self.mode {
            GeometryMode::Plane => {
                let (i, j) = (idx % self.x.n, idx / self.x.n);
                Point::xy(self.x_coord(i), self.y_coord(j))
            }
            _ => Point::x(self.x_coord(idx)),
        }
    }

    /// Whether `p` lies in the closed extents (with a relative slack of 1e-12).
    pub fn contains(&self, p: &[f64]) -> bool {
        let inside = |a: &Axis, v: f64| {
            let tol = 1e-12 * (a.hi - a.lo).abs().max(1.0);
            v >= a.lo - tol && v <= a.hi + tol
        };
        match self.mode {
            GeometryMode::Plane => p.len() >= 2 && inside(&self.x, p[0]) && inside(&self.y.unwrap(), p[1]),
            _ => !p.is_empty() && inside(&self.x, p[0]),
        }
    }
}

/// A point with one or two coordinates.
///
/// Geometry routines treat missing trailing coordinates as zero, so a radial
/// node `[r]` stands for `(r, 0, ..., 0)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    coords: [f64; 2],
    dim: usize,
}

impl Point {
    pub fn x(x: f64) -> Point {
        Point { coords: [x, 0.0], dim: 1 }
    }

    pub fn xy(x: f64, y: f64) -> Point {
        Point { coords: [x, y], dim: 2 }
    }

    pub fn from_slice(p: &[f64]) -> Point {
        match p.len() {
            1 => Point::x(p[0]),
            2 => Point::xy(p[0], p[1]),
            n => panic!("points have 1 or 2 coordinates, got {n}"),
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords[..self.dim]
    }

    pub fn norm(&self) -> f64 {
        self.coords[0].hypot(self.coords[1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_count_follows_extent() {
        let g = Grid::line(0.0, 1.0, 0.01).unwrap();
        assert_eq!(g.len(), 101);
        assert!((g.dx() - 0.01).abs() < 1e-15);
        assert_eq!(g.x_coord(100), 1.0);
    }

    #[test]
    fn spacing_never_exceeds_request() {
        let g = Grid::line(-3.0, 3.3, 0.04).unwrap();
        assert!(g.dx() <= 0.04);
        assert_eq!(g.x_coord(g.nx() - 1), 3.3);
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(Grid::line(0.0, 1.0, 0.0).is_err());
        assert!(Grid::line(0.0, 1.0, 1.5).is_err());
        assert!(Grid::radial(1, 1.0, 0.1).is_err());
        assert!(Grid::plane((0.0, 1.0), (0.0, 0.55), 0.1).is_err());
    }

    #[test]
    fn plane_is_row_major() {
        let g = Grid::plane((0.0, 1.0), (0.0, 0.5), 0.25).unwrap();
        assert_eq!((g.nx(), g.ny()), (5, 3));
        let p = g.point(g.index(3, 2));
        assert_eq!(p.as_slice(), &[0.75, 0.5]);
    }
}
