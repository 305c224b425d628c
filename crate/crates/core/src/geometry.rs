//! Convex initial regions, their signed distance, the distance evolved under
//! constant normal speed, and the cut-off distance `d = ζ(d̃)`.

use crate::eps_log;
use crate::error::{Error, Result};

/// An initial region `Ω₀`. Points with fewer coordinates than the shape are
/// padded with zeros, so a radial node `[r]` stands for `(r, 0)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ConvexBody {
    Interval { a: f64, b: f64 },
    Ball { center: [f64; 2], radius: f64 },
    Ellipse { center: [f64; 2], semi_axes: [f64; 2] },
}

fn coord(x: &[f64], i: usize) -> f64 {
    x.get(i).copied().unwrap_or(0.0)
}

const FOOT_POINT_TOL: f64 = 1e-12;
const FOOT_POINT_MAX_ITER: usize = 200;

impl ConvexBody {
    pub fn interval(a: f64, b: f64) -> Result<ConvexBody> {
        ConvexBody::Interval { a, b }.validated()
    }

    pub fn ball(center: [f64; 2], radius: f64) -> Result<ConvexBody> {
        ConvexBody::Ball { center, radius }.validated()
    }

    pub fn ellipse(center: [f64; 2], semi_axes: [f64; 2]) -> Result<ConvexBody> {
        ConvexBody::Ellipse { center, semi_axes }.validated()
    }

    /// Checks a nonempty interior containing the origin.
    pub fn validated(self) -> Result<ConvexBody> {
        let ok = match self {
            ConvexBody::Interval { a, b } => a < b,
            ConvexBody::Ball { radius, .. } => radius > 0.0,
            ConvexBody::Ellipse { semi_axes, .. } => semi_axes[0] > 0.0 && semi_axes[1] > 0.0,
        };
        if !ok {
            return Err(Error::Config(format!("{self:?} has an empty interior")));
        }
        if !(self.signed_distance(&[0.0, 0.0])? < 0.0) {
            return Err(Error::Config(format!("{self:?} does not contain the origin in its interior")));
        }
        Ok(self)
    }

    /// Negative inside, zero on the boundary, positive outside.
    pub fn signed_distance(&self, x: &[f64]) -> Result<f64> {
        match *self {
            ConvexBody::Interval { a, b } => {
                let v = coord(x, 0);
                Ok((a - v).max(v - b))
            }
            ConvexBody::Ball { center, radius } => {
                Ok((coord(x, 0) - center[0]).hypot(coord(x, 1) - center[1]) - radius)
            }
            ConvexBody::Ellipse { center, semi_axes } => {
                ellipse_signed_distance(semi_axes, coord(x, 0) - center[0], coord(x, 1) - center[1])
            }
        }
    }

    /// Radius of the largest inscribed ball.
    pub fn inradius(&self) -> f64 {
        match *self {
            ConvexBody::Interval { a, b } => 0.5 * (b - a),
            ConvexBody::Ball { radius, .. } => radius,
            ConvexBody::Ellipse { semi_axes, .. } => semi_axes[0].min(semi_axes[1]),
        }
    }

    pub fn diameter(&self) -> f64 {
        match *self {
            ConvexBody::Interval { a, b } => b - a,
            ConvexBody::Ball { radius, .. } => 2.0 * radius,
            ConvexBody::Ellipse { semi_axes, .. } => 2.0 * semi_axes[0].max(semi_axes[1]),
        }
    }

    /// Axis-aligned bounding box `[(lo, hi); 2]` (the second axis is `(0, 0)`
    /// for intervals).
    pub fn bounding_box(&self) -> [(f64, f64); 2] {
        match *self {
            ConvexBody::Interval { a, b } => [(a, b), (0.0, 0.0)],
            ConvexBody::Ball { center, radius } => {
                [(center[0] - radius, center[0] + radius), (center[1] - radius, center[1] + radius)]
            }
            ConvexBody::Ellipse { center, semi_axes } => [
                (center[0] - semi_axes[0], center[0] + semi_axes[0]),
                (center[1] - semi_axes[1], center[1] + semi_axes[1]),
            ],
        }
    }

    /// Center of symmetry.
    pub fn center(&self) -> [f64; 2] {
        match *self {
            ConvexBody::Interval { a, b } => [0.5 * (a + b), 0.0],
            ConvexBody::Ball { center, .. } | ConvexBody::Ellipse { center, .. } => center,
        }
    }
}

/// Signed distance to the ellipse `(x/e0)² + (y/e1)² = 1`.
///
/// The foot point is found by safeguarded Newton iteration on Eberly's
/// one-dimensional root problem, after reflecting into the first quadrant.
fn ellipse_signed_distance(axes: [f64; 2], x: f64, y: f64) -> Result<f64> {
    // order so that e0 >= e1
    let (e0, e1, y0, y1) =
        if axes[0] >= axes[1] { (axes[0], axes[1], x.abs(), y.abs()) } else { (axes[1], axes[0], y.abs(), x.abs()) };
    let inside = (y0 / e0).powi(2) + (y1 / e1).powi(2) < 1.0;
    let dist = if y1 > 0.0 {
        if y0 > 0.0 {
            let z0 = y0 / e0;
            let z1 = y1 / e1;
            let r0 = (e0 / e1).powi(2);
            let s = eberly_root(r0, z0, z1)?;
            let x0 = r0 * y0 / (s + r0);
            let x1 = y1 / (s + 1.0);
            (x0 - y0).hypot(x1 - y1)
        } else {
            (y1 - e1).abs()
        }
    } else {
        let numer = e0 * y0;
        let denom = e0 * e0 - e1 * e1;
        if numer < denom {
            let xde0 = numer / denom;
            let x0 = e0 * xde0;
            let x1 = e1 * (1.0 - xde0 * xde0).max(0.0).sqrt();
            (x0 - y0).hypot(x1)
        } else {
            (y0 - e0).abs()
        }
    };
    Ok(if inside { -dist } else { dist })
}

/// Root `s > −1` of `G(s) = (r0 z0/(s + r0))² + (z1/(s + 1))² − 1`, which is
/// strictly decreasing there.
fn eberly_root(r0: f64, z0: f64, z1: f64) -> Result<f64> {
    let g = |s: f64| {
        let a = r0 * z0 / (s + r0);
        let b = z1 / (s + 1.0);
        let v = a * a + b * b - 1.0;
        let dv = -2.0 * (a * a / (s + r0) + b * b / (s + 1.0));
        (v, dv)
    };
    let mut lo = z1 - 1.0;
    let mut hi = if g(0.0).0 < 0.0 { 0.0 } else { (r0 * r0 * z0 * z0 + z1 * z1).sqrt() - 1.0 };
    let mut s = 0.5 * (lo + hi);
    for _ in 0..FOOT_POINT_MAX_ITER {
        let (v, dv) = g(s);
        if v == 0.0 {
            return Ok(s);
        }
        if v > 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        let newton = s - v / dv;
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - s).abs() <= FOOT_POINT_TOL * (1.0 + s.abs()) || hi - lo <= FOOT_POINT_TOL * (1.0 + s.abs()) {
            return Ok(next);
        }
        s = next;
    }
    Err(Error::Numerical(format!("ellipse foot-point iteration did not converge (r0={r0}, z=({z0}, {z1}))")))
}

/// `ζ`: identity on `[−d0, d0]`, constant `±2d0` beyond `±2d0`, joined by the
/// C² quintic `h(τ) = τ + 4τ³ − 7τ⁴ + 3τ⁵`, whose derivative
/// `(1 − τ)²(15τ² + 2τ + 1)` is nonnegative. Returns `(ζ, ζ′, ζ″)`.
pub fn zeta(s: f64, d0: f64) -> (f64, f64, f64) {
    let a = s.abs();
    let sign = s.signum();
    if a <= d0 {
        return (s, 1.0, 0.0);
    }
    if a >= 2.0 * d0 {
        return (sign * 2.0 * d0, 0.0, 0.0);
    }
    let t = (a - d0) / d0;
    let t2 = t * t;
    let h = t + 4.0 * t2 * t - 7.0 * t2 * t2 + 3.0 * t2 * t2 * t;
    let h1 = (1.0 - t) * (1.0 - t) * (15.0 * t2 + 2.0 * t + 1.0);
    let h2 = 24.0 * t - 84.0 * t2 + 60.0 * t2 * t;
    (sign * d0 * (1.0 + h), h1, sign * h2 / d0)
}

/// Which of the three bands of the interface estimate a point belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    Tube,
    Inside,
    Outside,
}

/// The signed distance to `Ω₀` dilated at speed `c`, and its cut-off `ζ(d̃)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutoffDistance {
    pub body: ConvexBody,
    pub speed: f64,
    pub d0: f64,
}

impl CutoffDistance {
    /// Default cut-off scale `d0 = 0.2 · inradius`.
    pub fn new(body: ConvexBody, speed: f64) -> Result<CutoffDistance> {
        CutoffDistance::with_d0(body, speed, 0.2 * body.inradius())
    }

    pub fn with_d0(body: ConvexBody, speed: f64, d0: f64) -> Result<CutoffDistance> {
        if !(speed > 0.0) {
            return Err(Error::Config(format!("front speed must be positive, got {speed}")));
        }
        if !(d0 > 0.0) {
            return Err(Error::Config(format!("cut-off scale d0 must be positive, got {d0}")));
        }
        Ok(CutoffDistance { body, speed, d0 })
    }

    /// `d̃(t, x) = d̃(0, x) − c t`. Exact for convex bodies on both sides of
    /// the front, since the evolved region is the dilation `Ω₀ ⊕ B(ct)`.
    pub fn evolved_distance(&self, t: f64, x: &[f64]) -> Result<f64> {
        Ok(self.body.signed_distance(x)? - self.speed * t)
    }

    /// `d(t, x) = ζ(d̃(t, x))`.
    pub fn cutoff_distance(&self, t: f64, x: &[f64]) -> Result<f64> {
        Ok(zeta(self.evolved_distance(t, x)?, self.d0).0)
    }

    /// `sup |∂ₜd + c| / |d|` over all points. With `∂ₜd = −c ζ′(d̃)` this is
    /// `c · sup_s (1 − ζ′(s))/|ζ(s)|`, which vanishes where `ζ` is the identity
    /// and is positive only in the clamp zone `|d̃| > d0`.
    pub fn measured_mvt_constant(&self) -> f64 {
        let samples = 10_000;
        let mut worst = 0.0f64;
        for k in 0..=samples {
            let s = self.d0 * (1.0 + 1.5 * k as f64 / samples as f64);
            let (z, z1, _) = zeta(s, self.d0);
            worst = worst.max((1.0 - z1) / z.abs());
        }
        self.speed * worst
    }

    /// Band of `x` at time `t` for the tube half-width `C ε|ln ε|`.
    pub fn classify_region(&self, t: f64, x: &[f64], epsilon: f64, c_const: f64) -> Result<Region> {
        if (self.speed - crate::MINIMAL_SPEED).abs() > 1e-12 {
            return Err(Error::Domain(format!("region classification uses speed 2, got {}", self.speed)));
        }
        if !(epsilon > 0.0 && epsilon < (-1.0f64).exp()) || !(c_const > 0.0) {
            return Err(Error::Domain(format!("need eps in (0, 1/e) and C > 0, got {epsilon}, {c_const}")));
        }
        Ok(classify(self.evolved_distance(t, x)?, c_const * eps_log(epsilon)))
    }
}

/// Band for a signed distance and tube half-width.
pub fn classify(d: f64, half_width: f64) -> Region {
    if d.abs() < half_width {
        Region::Tube
    } else if d < 0.0 {
        Region::Inside
    } else {
        Region::Outside
    }
}
