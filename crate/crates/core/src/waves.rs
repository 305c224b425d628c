//! One-dimensional travelling waves `U″ + cU′ + U(1−U) = 0`, `U(−∞) = 1`.
//!
//! Profiles are shot from the unstable manifold of `U = 1`, tabulated on a
//! uniform grid and extended beyond the table by fitted analytic tails.

use std::io::Write;

use crate::error::{Error, Result};
use crate::numerics::ode::{Dopri, OdeOptions};
use crate::MINIMAL_SPEED;

/// Offset from `U = 1` at the shooting launch.
pub const LAUNCH_OFFSET: f64 = 1e-8;
/// Right end of the table for monotone waves.
pub const RIGHT_CUTOFF: f64 = 1e-10;
/// Relative tolerance of the shooting integration.
pub const SHOOTING_TOL: f64 = 1e-12;
/// Bound on the tabulated ODE residual.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// Smallest root of `λ² − cλ + 1 = 0`.
pub fn decay_rate(c: f64) -> Result<f64> {
    if !(c >= MINIMAL_SPEED) {
        return Err(Error::Domain(format!("decay_rate needs c >= 2, got {c}")));
    }
    let disc = (c * c - 4.0).max(0.0).sqrt();
    // the other root is (c + disc)/2 and the product of roots is 1
    Ok(2.0 / (c + disc))
}

/// Positive root of `r² + cr − 1 = 0`: growth rate of `1 − U` at `−∞`.
pub fn unstable_rate(c: f64) -> f64 {
    2.0 / (c + (c * c + 4.0).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Normalization {
    /// `U(0) = 1/2` (monotone waves).
    HalfAtZero,
    /// `U(0) = 0` at the first zero (sign-changing waves).
    ZeroAtZero,
}

/// `1 − U(z) ≈ c_seam e^{−mu|z|}` left of the table; `c_bound` bounds
/// `(1 − U(z)) e^{mu|z|}` on every `z ≤ 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LeftTail {
    pub c_bound: f64,
    pub mu: f64,
    pub c_seam: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RightTail {
    /// `U ≈ amplitude · e^{−lambda z}` (c > 2).
    Exponential { amplitude: f64, lambda: f64 },
    /// `U ≈ (a z + b) e^{−z}` (c = 2).
    Critical { a: f64, b: f64 },
    /// Linearization about zero past the overshoot window (c < 2):
    /// `U ≈ e^{−c s/2}(a cos ωs + b sin ωs)`, `s = z − z_max`.
    Oscillatory { a: f64, b: f64, omega: f64 },
}

/// A tabulated travelling wave.
#[derive(Clone, Debug)]
pub struct WaveProfile {
    c: f64,
    z_min: f64,
    dz: f64,
    u: Vec<f64>,
    up: Vec<f64>,
    normalization: Normalization,
    tail_left: LeftTail,
    tail_right: RightTail,
    kpp_ratio: Option<(f64, f64)>,
}

fn wave_rhs(c: f64) -> impl Fn(&[f64; 2]) -> [f64; 2] {
    move |y: &[f64; 2]| [y[1], -c * y[1] - y[0] * (1.0 - y[0])]
}

/// The same system in `(η, U′)` with `η = 1 − U`, which keeps full relative
/// precision of `1 − U` near the launch point.
fn gap_rhs(c: f64) -> impl Fn(&[f64; 2]) -> [f64; 2] {
    move |y: &[f64; 2]| [-y[1], -c * y[1] - (1.0 - y[0]) * y[0]]
}

fn shooting_options() -> OdeOptions {
    OdeOptions { atol: 1e-24, ..OdeOptions::with_tol(SHOOTING_TOL) }
}

/// Launch state in `(η, U′)` variables.
fn launch_state(c: f64) -> [f64; 2] {
    let r = unstable_rate(c);
    [LAUNCH_OFFSET, -r * LAUNCH_OFFSET]
}

/// Shoots from the launch point to the first time `t_hit` at which
/// `U = level` and tabulates the branch left of it on the grid
/// `t_hit + k dz`, `k ≤ 0`. The integration runs in `(η, U′)` while
/// `U > 1/2` and in `(U, U′)` afterwards, so both ends keep relative
/// precision. The landing pass and the event search follow different step
/// sequences, so `t_hit` is refined by Newton steps until the anchor row is
/// within 1e-9 cells of `level`; the anchor is then set to `level` exactly.
/// Returns `k_min` and the rows `(U, U′)`.
fn shoot_left(c: f64, dz: f64, level: f64, cap: f64) -> Result<(i64, Vec<[f64; 2]>)> {
    let y0 = launch_state(c);
    let switch = level.max(0.5);
    let never = || Error::Shooting(format!("wave with c={c} never reached U={level} within z-span {cap}"));
    let mut first = Dopri::new(gap_rhs(c), 0.0, y0, shooting_options());
    let (t_switch, y_switch) = first.advance_until(cap, |y| y[0] - (1.0 - switch))?.ok_or_else(never)?;
    let mut t_hit = t_switch;
    if level < switch {
        let mut tail = Dopri::new(wave_rhs(c), 0.0, [switch, y_switch[1]], shooting_options());
        t_hit += tail.advance_until(cap, |y| y[0] - level)?.ok_or_else(never)?.0;
    }
    for _ in 0..8 {
        let k_min = -((t_hit / dz) - 1e-9).floor() as i64;
        let mut gap = Dopri::new(gap_rhs(c), 0.0, y0, shooting_options());
        let mut direct: Option<Dopri<2, _>> = None;
        let mut rows = Vec::with_capacity((-k_min) as usize + 1);
        for k in k_min..=0 {
            let t = t_hit + k as f64 * dz;
            let row = match direct.as_mut() {
                Some(d) => d.advance_to(t)?,
                None => {
                    let y = if t <= 0.0 { y0 } else { gap.advance_to(t)? };
                    let row = [1.0 - y[0], y[1]];
                    if row[0] <= 0.5 && level < 0.5 {
                        direct = Some(Dopri::new(wave_rhs(c), t, row, shooting_options()));
                    }
                    row
                }
            };
            rows.push(row);
        }
        let last = rows.last_mut().unwrap();
        let miss = last[0] - level;
        if miss.abs() <= 1e-9 * dz * last[1].abs() {
            last[0] = level;
            return Ok((k_min, rows));
        }
        t_hit -= miss / last[1];
    }
    Err(Error::Shooting(format!("wave with c={c}: anchor U={level} could not be pinned to the grid")))
}

/// Continues from the anchor row in `U` variables, landing on `k dz`,
/// `k = 1, 2, ...` while `more(k, state)` holds for the row just added.
fn shoot_right<M>(c: f64, dz: f64, anchor: [f64; 2], rows: &mut Vec<[f64; 2]>, mut more: M) -> Result<()>
where
    M: FnMut(i64, &[f64; 2]) -> bool,
{
    let mut d = Dopri::new(wave_rhs(c), 0.0, anchor, shooting_options());
    let mut k = 0i64;
    let mut y = anchor;
    while more(k, &y) {
        k += 1;
        y = d.advance_to(k as f64 * dz)?;
        rows.push(y);
    }
    Ok(())
}

/// Least-squares line `y = p + q x`; returns `(p, q)`.
fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let q = sxy / sxx;
    (my - q * mx, q)
}

impl WaveProfile {
    fn z_at(&self, i: usize) -> f64 {
        self.z_min + i as f64 * self.dz
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn dz(&self) -> f64 {
        self.dz
    }

    pub fn z_min(&self) -> f64 {
        self.z_min
    }

    pub fn z_max(&self) -> f64 {
        self.z_at(self.u.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn tail_left(&self) -> LeftTail {
        self.tail_left
    }

    pub fn tail_right(&self) -> RightTail {
        self.tail_right
    }

    /// Decay rate of the right tail (`1` for c = 2).
    pub fn lambda_right(&self) -> Option<f64> {
        match self.tail_right {
            RightTail::Exponential { lambda, .. } => Some(lambda),
            RightTail::Critical { .. } => Some(1.0),
            RightTail::Oscillatory { .. } => None,
        }
    }

    /// `(γ⁻, γ⁺)` over the tabulated `z ∈ [1, z_max]`, present for c = 2.
    pub fn kpp_ratio(&self) -> Option<(f64, f64)> {
        self.kpp_ratio
    }

    /// Tabulated `(z, U, U′)`.
    pub fn table(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        (0..self.u.len()).map(move |i| (self.z_at(i), self.u[i], self.up[i]))
    }

    fn assemble(
        c: f64,
        dz: f64,
        k_min: i64,
        rows: Vec<[f64; 2]>,
        normalization: Normalization,
    ) -> Result<WaveProfile> {
        let u: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let up: Vec<f64> = rows.iter().map(|r| r[1]).collect();
        let z_min = k_min as f64 * dz;
        let mut p = WaveProfile {
            c,
            z_min,
            dz,
            u,
            up,
            normalization,
            tail_left: LeftTail { c_bound: 0.0, mu: 0.0, c_seam: 0.0 },
            tail_right: RightTail::Exponential { amplitude: 0.0, lambda: 0.0 },
            kpp_ratio: None,
        };
        p.tail_left = p.fit_left_tail()?;
        let residual = p.max_residual();
        if !(residual <= RESIDUAL_TOL) {
            return Err(Error::Numerical(format!("wave table residual {residual:e} exceeds {RESIDUAL_TOL:e}")));
        }
        Ok(p)
    }

    fn fit_left_tail(&self) -> Result<LeftTail> {
        let gap0 = 1.0 - self.u[0];
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for i in 0..self.u.len() {
            let g = 1.0 - self.u[i];
            if g > 10.0 * gap0 || self.z_at(i) > 0.0 {
                break;
            }
            xs.push(self.z_at(i));
            ys.push(g.ln());
        }
        if xs.len() < 3 {
            return Err(Error::Numerical("left tail has fewer than 3 points in its first decade".into()));
        }
        let (_, mu) = fit_line(&xs, &ys);
        let c_seam = gap0 * (mu * self.z_min.abs()).exp();
        let mut sup = 0.0f64;
        for i in 0..self.u.len() {
            let z = self.z_at(i);
            if z > 0.0 {
                break;
            }
            sup = sup.max((1.0 - self.u[i]) * (mu * z.abs()).exp());
        }
        // beyond the launch point the ratio still creeps up by O(1e-8) relative
        Ok(LeftTail { c_bound: sup * (1.0 + 1e-6), mu, c_seam })
    }

    /// Max over interior nodes of `|U″ + cU′ + U(1−U)|`, with `U″` from a
    /// fourth-order central difference of the tabulated `U′`.
    pub fn max_residual(&self) -> f64 {
        let n = self.u.len();
        let mut worst = 0.0f64;
        for i in 2..n.saturating_sub(2) {
            let upp = (-self.up[i + 2] + 8.0 * self.up[i + 1] - 8.0 * self.up[i - 1] + self.up[i - 2]) / (12.0 * self.dz);
            let r = upp + self.c * self.up[i] + self.u[i] * (1.0 - self.u[i]);
            worst = worst.max(r.abs());
        }
        worst
    }

    /// `U(z)` everywhere on ℝ: cubic Hermite inside the table, fitted tails
    /// outside.
    pub fn evaluate(&self, z: f64) -> f64 {
        let n = self.u.len();
        let s = (z - self.z_min) / self.dz;
        if s < 0.0 {
            let t = &self.tail_left;
            return 1.0 - t.c_seam * (-t.mu * z.abs()).exp();
        }
        if s > (n - 1) as f64 {
            return self.right_tail(z);
        }
        let r = s.round();
        if (s - r).abs() < 1e-9 {
            return self.u[r as usize];
        }
        let i = (s.floor() as usize).min(n - 2);
        let t = s - i as f64;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.u[i] + h10 * self.dz * self.up[i] + h01 * self.u[i + 1] + h11 * self.dz * self.up[i + 1]
    }

    /// `U′(z)` inside the table (Hermite derivative); tails are differentiated
    /// analytically.
    pub fn derivative(&self, z: f64) -> f64 {
        let n = self.u.len();
        let s = (z - self.z_min) / self.dz;
        if s < 0.0 {
            let t = &self.tail_left;
            return -t.c_seam * t.mu * (t.mu * z).exp();
        }
        if s > (n - 1) as f64 {
            let h = 1e-6 * z.abs().max(1.0);
            return (self.right_tail(z + h) - self.right_tail(z - h)) / (2.0 * h);
        }
        let i = (s.floor() as usize).min(n - 2);
        let t = s - i as f64;
        let t2 = t * t;
        let d00 = 6.0 * t2 - 6.0 * t;
        let d10 = 3.0 * t2 - 4.0 * t + 1.0;
        let d01 = -6.0 * t2 + 6.0 * t;
        let d11 = 3.0 * t2 - 2.0 * t;
        (d00 * self.u[i] + d01 * self.u[i + 1]) / self.dz + d10 * self.up[i] + d11 * self.up[i + 1]
    }

    fn right_tail(&self, z: f64) -> f64 {
        match self.tail_right {
            RightTail::Exponential { amplitude, lambda } => amplitude * (-lambda * z).exp(),
            RightTail::Critical { a, b } => (a * z + b) * (-z).exp(),
            RightTail::Oscillatory { a, b, omega } => {
                let s = z - self.z_max();
                (-0.5 * self.c * s).exp() * (a * (omega * s).cos() + b * (omega * s).sin())
            }
        }
    }

    /// Ratio bounds `min, max U(z)/(z e^{−z})` over tabulated `z ∈ [lo, hi]`.
    pub fn kpp_ratio_bounds_on(&self, lo: f64, hi: f64) -> Result<(f64, f64)> {
        if (self.c - MINIMAL_SPEED).abs() > 1e-12 {
            return Err(Error::Domain(format!("KPP ratio bounds need c = 2, profile has c = {}", self.c)));
        }
        let (mut g_min, mut g_max) = (f64::INFINITY, f64::NEG_INFINITY);
        for (z, u, _) in self.table() {
            if z >= lo - 1e-12 && z <= hi + 1e-12 {
                let r = u / (z * (-z).exp());
                g_min = g_min.min(r);
                g_max = g_max.max(r);
            }
        }
        if !g_min.is_finite() {
            return Err(Error::Domain(format!("no tabulated points in [{lo}, {hi}]")));
        }
        Ok((g_min, g_max))
    }

    /// `(γ⁻, γ⁺)` over the tabulated `z ∈ [1, z_max]`.
    pub fn kpp_ratio_bounds(&self) -> Result<(f64, f64)> {
        self.kpp_ratio_bounds_on(1.0, self.z_max())
    }

    /// `m⁻ = inf_{z ≥ 0} U(z) e^{λz}` with `λ` the decay rate of `c`.
    pub fn m_minus(&self) -> Result<f64> {
        let lambda = decay_rate(self.c)?;
        let mut m = f64::INFINITY;
        for (z, u, _) in self.table() {
            if z >= 0.0 {
                m = m.min(u * (lambda * z).exp());
            }
        }
        if let RightTail::Exponential { amplitude, .. } = self.tail_right {
            m = m.min(amplitude);
        }
        Ok(m)
    }

    /// `M_c = sup_{z ≥ 0} U(z) e^{λ_c z}` for c > 2.
    pub fn tail_sup(&self) -> Result<f64> {
        let lambda = match self.tail_right {
            RightTail::Exponential { .. } => decay_rate(self.c)?,
            _ => {
                return Err(Error::Domain(format!(
                    "U e^(lambda z) is unbounded or undefined for c = {}",
                    self.c
                )))
            }
        };
        let mut m = 0.0f64;
        for (z, u, _) in self.table() {
            if z >= 0.0 {
                m = m.max(u * (lambda * z).exp());
            }
        }
        if let RightTail::Exponential { amplitude, .. } = self.tail_right {
            m = m.max(amplitude);
        }
        Ok(m)
    }

    /// Position where a monotone profile takes the value `level ∈ (0, 1)`.
    pub fn position_of_level(&self, level: f64) -> Result<f64> {
        if self.normalization != Normalization::HalfAtZero {
            return Err(Error::Domain("level positions need a monotone profile".into()));
        }
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::Domain(format!("level must lie in (0,1), got {level}")));
        }
        let (mut lo, mut hi) = (self.z_min, self.z_max());
        while self.evaluate(lo) < level {
            lo -= 10.0 + (hi - lo);
        }
        while self.evaluate(hi) > level {
            hi += 10.0 + (hi - lo);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.evaluate(mid) > level {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-14 * lo.abs().max(1.0) {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Writes the table as CSV with columns `z,U,U_prime`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "z,U,U_prime")?;
        for (z, u, up) in self.table() {
            writeln!(out, "{z:.16e},{u:.16e},{up:.16e}")?;
        }
        Ok(())
    }
}

fn check_grid(dz: f64, z_span: f64) -> Result<()> {
    if !(dz > 0.0 && dz <= 1e-3) {
        return Err(Error::Domain(format!("wave spacing dz must lie in (0, 1e-3], got {dz}")));
    }
    if !(z_span >= 30.0) {
        return Err(Error::Domain(format!("wave z-span must be at least 30, got {z_span}")));
    }
    Ok(())
}

/// Shooting cap on the launch-to-anchor distance.
fn shooting_cap(c: f64, z_span: f64) -> f64 {
    z_span + 4.0 * (0.5 / LAUNCH_OFFSET).ln() / unstable_rate(c)
}

/// Monotone wave for `c ≥ 2`, normalized by `U(0) = 1/2`.
pub fn solve_wave(c: f64, dz: f64, z_span: f64) -> Result<WaveProfile> {
    if !(c >= MINIMAL_SPEED - 1e-12) {
        return Err(Error::Domain(format!("monotone waves need c >= 2, got {c}")));
    }
    check_grid(dz, z_span)?;
    let (k_min, mut rows) = shoot_left(c, dz, 0.5, shooting_cap(c, z_span))?;
    let anchor = *rows.last().unwrap();
    shoot_right(c, dz, anchor, &mut rows, |k, y| y[0] >= RIGHT_CUTOFF && (k + 1) as f64 * dz <= z_span + 1e-9)?;
    for (i, r) in rows.iter().enumerate() {
        if !(r[0] > 0.0 && r[0] < 1.0) || r[1] >= 0.0 {
            return Err(Error::Numerical(format!(
                "wave with c={c} is not monotone at table row {i}: U={}, U'={}",
                r[0], r[1]
            )));
        }
    }
    let mut p = WaveProfile::assemble(c, dz, k_min, rows, Normalization::HalfAtZero)?;
    p.tail_right = p.fit_right_tail()?;
    if (c - MINIMAL_SPEED).abs() <= 1e-12 {
        p.kpp_ratio = Some(p.kpp_ratio_bounds()?);
    }
    Ok(p)
}

impl WaveProfile {
    fn fit_right_tail(&self) -> Result<RightTail> {
        let n = self.u.len();
        let z_end = self.z_max();
        let u_end = self.u[n - 1];
        if (self.c - MINIMAL_SPEED).abs() <= 1e-12 {
            let (mut xs, mut ys) = (Vec::new(), Vec::new());
            for (z, u, _) in self.table() {
                if z >= z_end - 5.0 {
                    xs.push(z);
                    ys.push(u * z.exp());
                }
            }
            let (_, a) = fit_line(&xs, &ys);
            let b = u_end * z_end.exp() - a * z_end;
            return Ok(RightTail::Critical { a, b });
        }
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for i in (0..n).rev() {
            let z = self.z_at(i);
            if self.u[i] > 10.0 * u_end || z < 0.0 {
                break;
            }
            xs.push(z);
            ys.push(self.u[i].ln());
        }
        if xs.len() < 3 {
            return Err(Error::Numerical("right tail has fewer than 3 points in its last decade".into()));
        }
        let (_, slope) = fit_line(&xs, &ys);
        let lambda = -slope;
        Ok(RightTail::Exponential { amplitude: u_end * (lambda * z_end).exp(), lambda })
    }
}

/// Sign-changing wave for `0 < c < 2`, translated so that its first zero sits
/// at `z = 0`. The table runs from the launch point to the end of an overshoot
/// window of half an oscillation period past the zero.
pub fn solve_sign_changing_wave(c: f64, dz: f64, z_span: f64) -> Result<WaveProfile> {
    if !(c > 0.0 && c < MINIMAL_SPEED) {
        return Err(Error::Domain(format!("sign-changing waves need 0 < c < 2, got {c}")));
    }
    check_grid(dz, z_span)?;
    let omega = (1.0 - 0.25 * c * c).sqrt();
    let window = (std::f64::consts::PI / omega).min(z_span);
    let steps = (window / dz).ceil() as i64;
    let (k_min, mut rows) = shoot_left(c, dz, 0.0, shooting_cap(c, z_span))?;
    let anchor = *rows.last().unwrap();
    shoot_right(c, dz, anchor, &mut rows, |k, _| k < steps)?;
    let mut p = WaveProfile::assemble(c, dz, k_min, rows, Normalization::ZeroAtZero)?;
    let n = p.u.len();
    let (a, slope) = (p.u[n - 1], p.up[n - 1]);
    p.tail_right = RightTail::Oscillatory { a, b: (slope + 0.5 * c * a) / omega, omega };
    Ok(p)
}

/// Default table spacing.
pub const DEFAULT_DZ: f64 = 1e-3;
/// Default right extent of the table.
pub const DEFAULT_Z_SPAN: f64 = 40.0;

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use std::sync::OnceLock;

    fn critical() -> &'static WaveProfile {
        static P: OnceLock<WaveProfile> = OnceLock::new();
        P.get_or_init(|| solve_wave(2.0, DEFAULT_DZ, DEFAULT_Z_SPAN).unwrap())
    }

    /// Classical fixed-step RK4 from the same launch point, used as an
    /// independent check of the adaptive shooting.
    fn rk4_profile_at(c: f64, z_target: f64) -> f64 {
        let f = |y: [f64; 2]| [y[1], -c * y[1] - y[0] * (1.0 - y[0])];
        let h = 1e-4;
        let start = [1.0 - LAUNCH_OFFSET, -unstable_rate(c) * LAUNCH_OFFSET];
        let mut y = start;
        let step = |y: [f64; 2]| {
            let k1 = f(y);
            let k2 = f([y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
            let k3 = f([y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
            let k4 = f([y[0] + h * k3[0], y[1] + h * k3[1]]);
            [
                y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
            ]
        };
        // locate U = 1/2 by linear interpolation between steps
        let mut t = 0.0;
        let t_half = loop {
            let next = step(y);
            if next[0] <= 0.5 {
                let frac = (y[0] - 0.5) / (y[0] - next[0]);
                break t + frac * h;
            }
            y = next;
            t += h;
        };
        let mut y = start;
        let target = t_half + z_target;
        let n = (target / h).floor() as usize;
        for _ in 0..n {
            y = step(y);
        }
        let rest = target - n as f64 * h;
        let k1 = f(y);
        y[0] + rest * k1[0]
    }

    #[test]
    fn decay_rate_values() {
        assert!((decay_rate(2.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((decay_rate(2.5).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(decay_rate(1.9), Err(Error::Domain(_))));
    }

    #[test]
    fn critical_wave_is_normalized_and_accurate() {
        let p = critical();
        assert_eq!(p.evaluate(0.0), 0.5);
        assert!(p.max_residual() <= RESIDUAL_TOL);
        let w = p.table().collect::<Vec<_>>();
        assert!(w.windows(2).all(|s| s[1].1 < s[0].1));
    }

    #[test]
    fn matches_fixed_step_oracle() {
        let p = critical();
        for z in [-5.0, 2.0, 8.0] {
            let a = p.evaluate(z);
            let b = rk4_profile_at(2.0, z);
            assert!((a - b).abs() <= 1e-6 * a.max(1e-3), "z={z}: {a} vs {b}");
        }
    }

    #[test]
    fn right_rate_matches_decay_rate() {
        for c in [2.2, 2.5, 3.0, 5.0] {
            let p = solve_wave(c, DEFAULT_DZ, DEFAULT_Z_SPAN).unwrap();
            let lam = p.lambda_right().unwrap();
            let exact = decay_rate(c).unwrap();
            assert!((lam - exact).abs() <= 0.01 * exact, "c={c}: {lam} vs {exact}");
            assert!(p.max_residual() <= RESIDUAL_TOL);
        }
    }

    #[test]
    fn seams_are_continuous() {
        for c in [2.0, 2.5] {
            let p = solve_wave(c, DEFAULT_DZ, DEFAULT_Z_SPAN).unwrap();
            let (zl, zr) = (p.z_min(), p.z_max());
            let jump_r = (p.evaluate(zr + 1e-12) - p.evaluate(zr)).abs() / p.evaluate(zr);
            let jump_l = (p.evaluate(zl - 1e-12) - p.evaluate(zl)).abs() / p.evaluate(zl);
            assert!(jump_r <= 1e-6 && jump_l <= 1e-6);
        }
    }

    #[test]
    fn tails_outside_table() {
        let p = critical();
        let z = p.z_max() + 5.0;
        if let RightTail::Critical { a, b } = p.tail_right() {
            assert_eq!(p.evaluate(z), (a * z + b) * (-z).exp());
        } else {
            panic!("critical wave must carry the z e^-z tail");
        }
        let zl = p.z_min() - 5.0;
        let v = p.evaluate(zl);
        let t = p.tail_left();
        assert!(v < 1.0 && v > 1.0 - t.c_bound * (-t.mu * zl.abs()).exp());
    }

    #[test]
    fn left_tail_bound_holds_on_table() {
        let p = critical();
        let t = p.tail_left();
        assert!((t.mu - unstable_rate(2.0)).abs() < 1e-4);
        for (z, u, _) in p.table().filter(|r| r.0 <= 0.0) {
            assert!(1.0 - u <= t.c_bound * (-t.mu * z.abs()).exp());
        }
    }

    #[test]
    fn derivative_consistency() {
        let p = solve_wave(2.5, DEFAULT_DZ, DEFAULT_Z_SPAN).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        let h = p.dz() / 2.0;
        for _ in 0..50 {
            let i = rng.gen_range(2..p.len() - 2);
            let (z, _, up) = p.table().nth(i).unwrap();
            let fd = (p.evaluate(z + h) - p.evaluate(z - h)) / (2.0 * h);
            assert!((fd - up).abs() <= 1e-4 * up.abs(), "z={z}: {fd} vs {up}");
        }
    }

    #[test]
    fn kpp_ratio_spread() {
        let p = critical();
        let (gm, gp) = p.kpp_ratio_bounds_on(1.0, 15.0).unwrap();
        assert!(gm > 0.0 && gm <= gp && gp / gm <= 10.0);
        let r1 = p.evaluate(1.0) / (-1.0f64).exp();
        let (a, b) = p.kpp_ratio().unwrap();
        assert!(a <= r1 && r1 <= b);
        assert!(p.m_minus().unwrap() > 0.0);
        let other = solve_wave(2.5, DEFAULT_DZ, DEFAULT_Z_SPAN).unwrap();
        assert!(other.kpp_ratio_bounds().is_err());
    }

    #[test]
    fn sign_changing_waves() {
        let p = solve_sign_changing_wave(1.0, DEFAULT_DZ, DEFAULT_Z_SPAN).unwrap();
        assert_eq!(p.evaluate(0.0), 0.0);
        assert!(p.max_residual() <= RESIDUAL_TOL);
        let min_over = p.table().filter(|r| r.0 > 0.0).map(|r| r.1).fold(f64::INFINITY, f64::min);
        assert!(min_over < 0.0);
        assert!(p.table().filter(|r| r.0 < 0.0).all(|r| r.1 > 0.0));
        let q = solve_sign_changing_wave(1.99, DEFAULT_DZ, DEFAULT_Z_SPAN).unwrap();
        assert!(q.z_min() < p.z_min());
        assert!(solve_sign_changing_wave(2.0, DEFAULT_DZ, DEFAULT_Z_SPAN).is_err());
    }

    #[test]
    fn level_positions_invert_evaluate() {
        let p = critical();
        for level in [0.9, 0.5, 0.02, 1e-12] {
            let z = p.position_of_level(level).unwrap();
            assert!((p.evaluate(z) - level).abs() <= 1e-10 * level.max(1e-3));
        }
    }

    #[test]
    fn csv_dump_has_header() {
        let p = solve_sign_changing_wave(1.5, DEFAULT_DZ, DEFAULT_Z_SPAN).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("z,U,U_prime\n"));
        assert_eq!(text.lines().count(), p.len() + 1);
    }
}
