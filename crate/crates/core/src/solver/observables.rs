//! Front position, layer thickness and checkpoint dumps.

use std::io::Write;

use crate::error::{Error, Result};
use crate::numerics::{Field, GeometryMode};

/// Outermost crossing of `level` along a sampled profile `(s_k, u_k)`, by
/// linear interpolation. `None` when the profile never drops below `level`
/// after being at or above it.
fn outermost_crossing(s: impl Fn(usize) -> f64, u: &[f64], level: f64) -> Option<f64> {
    let k = u.iter().rposition(|v| *v >= level)?;
    if k + 1 == u.len() {
        return None;
    }
    if u[k] == level {
        return Some(s(k));
    }
    let frac = (u[k] - level) / (u[k] - u[k + 1]);
    Some(s(k) + frac * (s(k + 1) - s(k)))
}

/// Outermost crossing of `level` along the scan axis (line and radial
/// modes). In plane mode this scans the ray at angle 0 from the origin.
pub fn front_position(field: &Field, level: f64) -> Option<f64> {
    let g = field.grid();
    match g.mode() {
        GeometryMode::Plane => front_on_ray(field, level, [0.0, 0.0], 0.0).ok().flatten(),
        _ => outermost_crossing(|i| g.x_coord(i), field.values(), level),
    }
}

/// Samples the field along the ray `origin + s(cos θ, sin θ)` at spacing
/// `dx/2` (bilinear interpolation) until it leaves the grid.
pub fn ray_profile(field: &Field, origin: [f64; 2], angle: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let g = field.grid();
    if g.mode() != GeometryMode::Plane {
        return Err(Error::Domain("rays need a plane grid".into()));
    }
    if !g.contains(&origin) {
        return Err(Error::Domain(format!("ray origin {origin:?} outside the grid")));
    }
    let h = 0.5 * g.dx();
    let (c, s) = (angle.cos(), angle.sin());
    let mut ss = Vec::new();
    let mut uu = Vec::new();
    let mut k = 0usize;
    loop {
        let d = k as f64 * h;
        let p = [origin[0] + d * c, origin[1] + d * s];
        if !g.contains(&p) {
            break;
        }
        ss.push(d);
        uu.push(field.interpolate(&p)?);
        k += 1;
    }
    Ok((ss, uu))
}

/// Outermost crossing distance along one ray (plane mode).
pub fn front_on_ray(field: &Field, level: f64, origin: [f64; 2], angle: f64) -> Result<Option<f64>> {
    let (s, u) = ray_profile(field, origin, angle)?;
    Ok(outermost_crossing(|k| s[k], &u, level))
}

/// Front distance along each ray (plane mode).
pub fn front_on_rays(field: &Field, level: f64, origin: [f64; 2], angles: &[f64]) -> Result<Vec<Option<f64>>> {
    angles.iter().map(|a| front_on_ray(field, level, origin, *a)).collect()
}

/// `x(u = ε) − x(u = 1 − 2ε)` along the scan axis.
pub fn layer_thickness(field: &Field, epsilon: f64) -> Option<f64> {
    Some(front_position(field, epsilon)? - front_position(field, 1.0 - 2.0 * epsilon)?)
}

/// Layer thickness along one ray (plane mode).
pub fn thickness_on_ray(field: &Field, epsilon: f64, origin: [f64; 2], angle: f64) -> Result<Option<f64>> {
    let (s, u) = ray_profile(field, origin, angle)?;
    let outer = outermost_crossing(|k| s[k], &u, epsilon);
    let inner = outermost_crossing(|k| s[k], &u, 1.0 - 2.0 * epsilon);
    Ok(outer.zip(inner).map(|(a, b)| a - b))
}

/// Writes `# t=<t>`, a column header, then one row per node.
pub fn write_checkpoint<W: Write>(mut w: W, t: f64, field: &Field) -> Result<()> {
    let g = field.grid();
    writeln!(w, "# t={t:.16e}")?;
    match g.mode() {
        GeometryMode::Line => writeln!(w, "x,u")?,
        GeometryMode::Radial { .. } => writeln!(w, "r,u")?,
        GeometryMode::Plane => writeln!(w, "x,y,u")?,
    }
    for (idx, v) in field.values().iter().enumerate() {
        let p = g.point(idx);
        for c in p.as_slice() {
            write!(w, "{c:.16e},")?;
        }
        writeln!(w, "{v:.16e}")?;
    }
    Ok(())
}
