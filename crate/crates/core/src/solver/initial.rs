use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ConvexBody;
use crate::numerics::{Field, GeometryMode, Grid};
use crate::waves::{self, WaveProfile};

/// Exponential tail `M e^{−λ‖x‖/ε}` added to compactly supported data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpTail {
    pub lambda: f64,
    pub m: f64,
}

/// Recipe for `u₀,ε`.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialData {
    /// `g(x) = A(1 − (1 − s)³)`, `s = clamp(−d̃(0,x)/w, 0, 1)`, plus an optional
    /// exponential tail.
    Compact { body: ConvexBody, amplitude: f64, width: f64, tail: Option<ExpTail> },
    /// `m / (1 + ‖x‖ⁿ/εⁿ)`, bounded by the cap `M ≥ m`.
    Algebraic { m: f64, n: f64, cap: f64 },
    /// The minimal-speed wave `U((x − x0)/ε)` (line mode only).
    TravellingWave { x0: f64 },
}

impl InitialData {
    pub fn validate(&self) -> Result<()> {
        match *self {
            InitialData::Compact { amplitude, width, tail, .. } => {
                if !(amplitude > 0.0 && amplitude <= 1.0) {
                    return Err(Error::Config(format!("amplitude must lie in (0, 1], got {amplitude}")));
                }
                if !(width > 0.0) {
                    return Err(Error::Config(format!("profile width must be positive, got {width}")));
                }
                if let Some(t) = tail {
                    if !(t.lambda >= 1.0) || !(t.m > 0.0) {
                        return Err(Error::Config(format!("tail needs lambda >= 1 and M > 0, got {t:?}")));
                    }
                }
            }
            InitialData::Algebraic { m, n, cap } => {
                if !(m > 0.0 && n > 0.0 && cap >= m) {
                    return Err(Error::Config(format!("algebraic data needs m, n > 0 and cap >= m, got {m}, {n}, {cap}")));
                }
            }
            InitialData::TravellingWave { x0 } => {
                if !x0.is_finite() {
                    return Err(Error::Config("wave position must be finite".into()));
                }
            }
        }
        Ok(())
    }

    /// `‖g‖∞` of the compactly supported part (the whole sup for the other
    /// families).
    pub fn g_sup(&self) -> f64 {
        match *self {
            InitialData::Compact { amplitude, .. } => amplitude,
            InitialData::Algebraic { m, .. } => m,
            InitialData::TravellingWave { .. } => 1.0,
        }
    }

    /// The tail constant `M` (zero without a tail).
    pub fn tail_m(&self) -> f64 {
        match *self {
            InitialData::Compact { tail, .. } => tail.map_or(0.0, |t| t.m),
            InitialData::Algebraic { cap, .. } => cap,
            InitialData::TravellingWave { .. } => 0.0,
        }
    }

    /// Lower bound on `|∂g/∂n|` at the boundary: `3A/w`.
    pub fn slope_floor(&self) -> Option<f64> {
        match *self {
            InitialData::Compact { amplitude, width, .. } => Some(3.0 * amplitude / width),
            _ => None,
        }
    }

    pub fn body(&self) -> Option<&ConvexBody> {
        match self {
            InitialData::Compact { body, .. } => Some(body),
            _ => None,
        }
    }

    /// The compactly supported part `g(x)`.
    pub fn g(&self, x: &[f64]) -> Result<f64> {
        match *self {
            InitialData::Compact { body, amplitude, width, .. } => {
                let s = (-body.signed_distance(x)? / width).clamp(0.0, 1.0);
                let q = 1.0 - s;
                Ok(amplitude * (1.0 - q * q * q))
            }
            _ => Err(Error::Domain("g is defined for compactly supported data only".into())),
        }
    }
}

/// Euclidean norm of a point, padding missing coordinates with zero.
pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Nodes of `grid` that are symmetry planes of a body centered on them count
/// as covered even if the body extends past them.
fn covers(grid: &Grid, body: &ConvexBody) -> bool {
    let bb = body.bounding_box();
    let center = body.center();
    let slack = 1e-12;
    let axis_ok = |lo: f64, hi: f64, (blo, bhi): (f64, f64), c: f64| {
        (lo <= blo + slack || (lo - c).abs() <= slack) && hi >= bhi - slack
    };
    let xa = grid.x_axis();
    match grid.mode() {
        GeometryMode::Line => axis_ok(xa.lo, xa.hi, bb[0], center[0]),
        GeometryMode::Radial { .. } => xa.hi >= body.bounding_box()[0].1 - slack,
        GeometryMode::Plane => {
            let ya = grid.y_axis().unwrap();
            axis_ok(xa.lo, xa.hi, bb[0], center[0]) && axis_ok(ya.lo, ya.hi, bb[1], center[1])
        }
    }
}

/// Checks that the body fits the geometry mode: intervals on lines, balls
/// centered at the origin in radial mode, balls or ellipses in the plane.
pub(crate) fn check_body_mode(grid: &Grid, body: &ConvexBody) -> Result<()> {
    let ok = match (grid.mode(), body) {
        (GeometryMode::Line, ConvexBody::Interval { .. }) => true,
        (GeometryMode::Radial { .. }, ConvexBody::Ball { center, .. }) => center[0] == 0.0 && center[1] == 0.0,
        (GeometryMode::Plane, ConvexBody::Ball { .. } | ConvexBody::Ellipse { .. }) => true,
        _ => false,
    };
    if !ok {
        return Err(Error::Config(format!("{body:?} does not fit {} geometry", grid.mode().name())));
    }
    Ok(())
}

/// Samples `u₀,ε` on the grid.
pub fn build_initial(initial: &InitialData, grid: &Grid, epsilon: f64) -> Result<Field> {
    initial.validate()?;
    match *initial {
        InitialData::Compact { body, tail, .. } => {
            check_body_mode(grid, &body)?;
            if !covers(grid, &body) {
                return Err(Error::Config(format!("grid does not cover the support of g ({body:?})")));
            }
            let values = (0..grid.len())
                .map(|idx| {
                    let p = grid.point(idx);
                    let x = p.as_slice();
                    let h = tail.map_or(0.0, |t| t.m * (-t.lambda * norm(x) / epsilon).exp());
                    Ok(initial.g(x)? + h)
                })
                .collect::<Result<Vec<_>>>()?;
            Field::new(*grid, values)
        }
        InitialData::Algebraic { m, n, .. } => {
            Ok(Field::from_fn(*grid, |x| m / (1.0 + (norm(x) / epsilon).powf(n))))
        }
        InitialData::TravellingWave { x0 } => {
            if grid.mode() != GeometryMode::Line {
                return Err(Error::Config("travelling-wave data needs line geometry".into()));
            }
            let profile = waves::solve_wave(crate::MINIMAL_SPEED, waves::DEFAULT_DZ, waves::DEFAULT_Z_SPAN)?;
            Ok(wave_field(&profile, grid, x0, epsilon))
        }
    }
}

/// `U((x − x0)/ε)` sampled on a line grid.
pub fn wave_field(profile: &WaveProfile, grid: &Grid, x0: f64, epsilon: f64) -> Field {
    Field::from_fn(*grid, |x| profile.evaluate((x[0] - x0) / epsilon))
}
