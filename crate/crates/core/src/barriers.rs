//! Sub- and super-solutions of `∂ₜu = εΔu + ε⁻¹u(1−u)`, the constants that
//! parameterize them, and discrete residual checks.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{ConvexBody, CutoffDistance};
use crate::kinetics::Kinetics;
use crate::numerics::ode::{Dopri, OdeOptions};
use crate::numerics::{Field, GeometryMode, Grid};
use crate::solver::InitialData;
use crate::waves::{decay_rate, Normalization, WaveProfile};

/// Constants of the barrier family for one ε.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BarrierParams {
    /// Drift `K` of the generation sub-solution.
    pub k_drift: f64,
    /// Amplitude `K̂` of the global super-solution.
    pub k_hat: f64,
    /// Generation threshold factor `k` (`g ≥ kε|ln ε|`).
    pub k_gen: f64,
    /// `t^ε = α ε|ln ε|`.
    pub alpha: f64,
    pub m1: f64,
    pub m2: f64,
    pub c1: f64,
    pub rho: f64,
    /// Tube constant `𝒞`.
    pub c_const: f64,
}

/// Logistic flow `ξ e^s / (1 + ξ(e^s − 1))` for any `ξ ≥ 0`.
fn logistic(xi: f64, s: f64) -> f64 {
    if xi == 0.0 {
        return 0.0;
    }
    xi / (xi + (1.0 - xi) * (-s).exp())
}

/// Curvature bound `sup Δd̃` on the ramp `{−w ≤ d̃ < 0}` of `g`.
fn ramp_curvature(body: &ConvexBody, width: f64, dim: u32) -> Result<f64> {
    let n1 = dim.saturating_sub(1) as f64;
    match *body {
        ConvexBody::Interval { .. } => Ok(0.0),
        ConvexBody::Ball { radius, .. } => {
            if width >= radius {
                return Err(Error::Config(format!("profile width {width} reaches the center of the ball")));
            }
            Ok(n1 / (radius - width))
        }
        ConvexBody::Ellipse { semi_axes, .. } => {
            let (a, b) = (semi_axes[0].max(semi_axes[1]), semi_axes[0].min(semi_axes[1]));
            let kappa = a / (b * b);
            if width * kappa >= 1.0 {
                return Err(Error::Config(format!("profile width {width} exceeds the focal curvature radius")));
            }
            Ok(kappa / (1.0 - width * kappa))
        }
    }
}

/// Drift constant `K` making `max{0, w(t/ε, g − Kt)}` a sub-solution on
/// `[0, a ε|ln ε|]`: `1.25 · sup ε(|w_ξξ/w_ξ| |∇g|² + |Δg|)` over the support,
/// with `|∇g| ≤ 3A/w` and `|Δg| ≤ 6A/w² + 3A·sup Δd̃/w`.
pub fn generation_drift(kin: &Kinetics, initial: &InitialData, dim: u32, a: f64) -> Result<f64> {
    let (body, amplitude, width) = match initial {
        InitialData::Compact { body, amplitude, width, .. } => (body, *amplitude, *width),
        _ => return Err(Error::Domain("the generation sub-solution needs compactly supported data".into())),
    };
    if !(a > 0.0) {
        return Err(Error::Domain(format!("generation window factor must be positive, got {a}")));
    }
    let eps = kin.epsilon();
    let grad2 = (3.0 * amplitude / width).powi(2);
    let lap = 6.0 * amplitude / (width * width) + 3.0 * amplitude * ramp_curvature(body, width, dim)? / width;
    let s_max = a * kin.ln_abs();
    let n_xi = 120;
    let n_s = 60;
    let xis: Vec<f64> = (0..n_xi)
        .map(|i| amplitude * (1e-4f64).powf(1.0 - i as f64 / (n_xi - 1) as f64))
        .collect();
    let ratios = xis
        .par_iter()
        .map(|&xi| -> Result<f64> {
            let rhs = |y: &[f64; 3]| {
                let (f, f1, f2) = kin.fbar_eps_derivs(y[0]);
                [f, f1 * y[1], f2 * y[1] * y[1] + f1 * y[2]]
            };
            let mut d = Dopri::new(rhs, 0.0, [xi, 1.0, 0.0], OdeOptions::with_tol(1e-10));
            let mut worst = 0.0f64;
            for k in 1..=n_s {
                let y = d.advance_to(s_max * k as f64 / n_s as f64)?;
                if y[0] > 0.0 {
                    worst = worst.max((y[2] / y[1]).abs());
                }
            }
            Ok(worst)
        })
        .collect::<Result<Vec<_>>>()?;
    let ratio = ratios.into_iter().fold(0.0, f64::max);
    Ok(1.25 * eps * (ratio * grad2 + lap))
}

/// `max{0, w(t/ε, g(x) − Kt)}`; zero outside `Ω₀`.
pub fn generation_sub(t: f64, x: &[f64], k_drift: f64, kin: &Kinetics, initial: &InitialData) -> Result<f64> {
    let g = initial.g(x)?;
    let xi = g - k_drift * t;
    if g == 0.0 || xi <= 0.0 {
        return Ok(0.0);
    }
    Ok(kin.semiflow(t / kin.epsilon(), xi)?.max(0.0))
}

/// `w(t/ε, ‖g‖∞ + M)` along the logistic flow: spatially constant.
pub fn generation_super(t: f64, initial: &InitialData, epsilon: f64) -> f64 {
    logistic(initial.g_sup() + initial.tail_m(), t / epsilon)
}

/// `inf_{z ≥ 0} U(z) e^{λz}` over the tabulated profile.
pub fn m_minus(wave: &WaveProfile, lambda: f64) -> f64 {
    wave.table()
        .filter(|(z, _, _)| *z >= 0.0)
        .map(|(z, u, _)| u * (lambda * z).exp())
        .fold(f64::INFINITY, f64::min)
}

/// `K₀ = max(1, M/m⁻, (‖g‖∞ + M)/U*(0))`.
pub fn k0_lower_bound(wave: &WaveProfile, initial: &InitialData) -> Result<f64> {
    if (wave.c() - crate::MINIMAL_SPEED).abs() > 1e-12 || wave.normalization() != Normalization::HalfAtZero {
        return Err(Error::Dependency(format!("K0 needs the minimal-speed wave, got c = {}", wave.c())));
    }
    let (g, m) = (initial.g_sup(), initial.tail_m());
    let tail_term = match initial {
        InitialData::Compact { tail: Some(t), .. } => t.m / m_minus(wave, t.lambda),
        InitialData::Compact { tail: None, .. } => 0.0,
        _ => return Err(Error::Dependency("K0 needs compactly supported data with optional tail".into())),
    };
    Ok(1f64.max(tail_term).max((g + m) / wave.evaluate(0.0)))
}

/// `K̂ · U*((d̃(0,x) − 2t)/ε)`.
pub fn global_super(t: f64, x: &[f64], k_hat: f64, wave: &WaveProfile, body: &ConvexBody, epsilon: f64) -> Result<f64> {
    let d = body.signed_distance(x)?;
    Ok(k_hat * wave.evaluate((d - crate::MINIMAL_SPEED * t) / epsilon))
}

/// `c(ε) = 2 − ε|ln ε|`.
pub fn motion_speed(epsilon: f64) -> f64 {
    crate::MINIMAL_SPEED - crate::eps_log(epsilon)
}

/// `u⁻_c(t,x) = (1−ε) V((d(t,x) + ε|ln ε| m₁ e^{m₂t})/ε)`, `V = U` on `z < 0`
/// and zero elsewhere.
#[derive(Clone, Debug)]
pub struct MotionSub<'a> {
    pub wave: &'a WaveProfile,
    pub distance: CutoffDistance,
    pub epsilon: f64,
    pub m1: f64,
    pub m2: f64,
}

impl<'a> MotionSub<'a> {
    pub fn new(wave: &'a WaveProfile, body: ConvexBody, epsilon: f64, m1: f64, m2: f64) -> Result<MotionSub<'a>> {
        if wave.normalization() != Normalization::ZeroAtZero {
            return Err(Error::Dependency("the motion sub-solution needs a sign-changing wave".into()));
        }
        if !(m1 >= 0.0 && m2 >= 0.0) {
            return Err(Error::Config(format!("m1, m2 must be nonnegative, got {m1}, {m2}")));
        }
        Ok(MotionSub { wave, distance: CutoffDistance::new(body, wave.c())?, epsilon, m1, m2 })
    }

    /// The shifted argument `θ`.
    pub fn theta(&self, t: f64, x: &[f64]) -> Result<f64> {
        let eps = self.epsilon;
        let d = self.distance.cutoff_distance(t, x)?;
        Ok((d + crate::eps_log(eps) * self.m1 * (self.m2 * t).exp()) / eps)
    }

    pub fn evaluate(&self, t: f64, x: &[f64]) -> Result<f64> {
        let th = self.theta(t, x)?;
        Ok(if th >= 0.0 { 0.0 } else { (1.0 - self.epsilon) * self.wave.evaluate(th) })
    }
}

/// `u⁻_c(t, x)` for one-off evaluations.
pub fn motion_sub(t: f64, x: &[f64], m1: f64, m2: f64, wave: &WaveProfile, body: ConvexBody, epsilon: f64) -> Result<f64> {
    MotionSub::new(wave, body, epsilon, m1, m2)?.evaluate(t, x)
}

/// Smallest `m₁` with `u⁻_c(0, x) ≤ u(x)` at every node of `field` (the
/// solution at `t^ε`), by bisection to a relative width of 1e-6.
pub fn fit_m1(field: &Field, wave: &WaveProfile, body: ConvexBody, epsilon: f64, m2: f64) -> Result<f64> {
    let grid = field.grid();
    let ordered = |m1: f64| -> Result<bool> {
        let sub = MotionSub::new(wave, body, epsilon, m1, m2)?;
        for (idx, u) in field.values().iter().enumerate() {
            if sub.evaluate(0.0, grid.point(idx).as_slice())? > *u {
                return Ok(false);
            }
        }
        Ok(true)
    };
    if ordered(0.0)? {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    while !ordered(hi)? {
        hi *= 2.0;
        if hi > 1e4 {
            return Err(Error::Numerical("no m1 below 1e4 orders the motion sub-solution".into()));
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-6 * hi {
        let mid = 0.5 * (lo + hi);
        if ordered(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `m̃₂ = 2N(2/(m₁μ) + 1)`.
pub fn m2_recipe(n_const: f64, m1: f64, mu: f64) -> f64 {
    2.0 * n_const * (2.0 / (m1 * mu) + 1.0)
}

/// `max(1, 2(2T + m₁e^{m₂T}), 2/μ)`; the tube constant must exceed it.
pub fn tube_constant_floor(t_end: f64, m1: f64, m2: f64, mu: f64) -> f64 {
    1f64.max(2.0 * (2.0 * t_end + m1 * (m2 * t_end).exp())).max(2.0 / mu)
}

/// Smallest `𝒞` for which the three bands hold at every node: `u ≥ 1 − 2ε`
/// where `d̃ ≤ −𝒞ε|ln ε|` and `u ≤ ε` where `d̃ ≥ 𝒞ε|ln ε|` (`d̃` travelling
/// at speed 2).
pub fn measured_tube_constant(field: &Field, t: f64, body: &ConvexBody, epsilon: f64) -> Result<f64> {
    let grid = field.grid();
    let el = crate::eps_log(epsilon);
    let mut worst = 0.0f64;
    for (idx, u) in field.values().iter().enumerate() {
        let d = body.signed_distance(grid.point(idx).as_slice())? - crate::MINIMAL_SPEED * t;
        let violates = (d < 0.0 && *u < 1.0 - 2.0 * epsilon) || (d > 0.0 && *u > epsilon);
        if violates {
            worst = worst.max(d.abs() / el);
        }
    }
    Ok(worst)
}

/// `ξ_ε = ε (m/(kε|ln ε|) − 1)^{1/n}`.
pub fn xi_eps(epsilon: f64, k: f64, m: f64, n: f64) -> Result<f64> {
    let thr = k * crate::eps_log(epsilon);
    if thr > m {
        return Err(Error::Domain(format!("generation threshold k eps|ln eps| = {thr} exceeds m = {m}")));
    }
    Ok(epsilon * (m / thr - 1.0).max(0.0).powf(1.0 / n))
}

/// Profile of the radial sub-solution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Plateau {
    /// `v₀(s) = U(ρ)` on `|s| ≤ ρ`, `U(|s|)` elsewhere.
    Symmetric,
    /// `q(s) = U(0)` on `s ≤ ρ`, `U(s − ρ)` beyond, with `U` translated so
    /// that `U(0) = 1 − ε̂`.
    Shifted { eps_hat: f64 },
}

/// `W(t,x) = v((‖x‖ − c₁t)/ε)` for a monotone wave of speed `c > 2`.
#[derive(Clone, Debug)]
pub struct RadialSub<'a> {
    pub wave: &'a WaveProfile,
    pub c1: f64,
    pub rho: f64,
    pub epsilon: f64,
    pub dim: u32,
    pub plateau: Plateau,
    shift: f64,
}

impl<'a> RadialSub<'a> {
    /// Checks `ρ ≥ max((N−1)/(c−c₁), n/λ_c)` and `m/(1+ρⁿ) ≥ M_c e^{−λ_cρ}`
    /// (symmetric plateau) or `c₁ + (N−1)/ρ ≤ c` (shifted plateau).
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        wave: &'a WaveProfile,
        c1: f64,
        rho: f64,
        epsilon: f64,
        dim: u32,
        plateau: Plateau,
        m: f64,
        n: f64,
    ) -> Result<RadialSub<'a>> {
        let c = wave.c();
        if !(c > crate::MINIMAL_SPEED) || wave.normalization() != Normalization::HalfAtZero {
            return Err(Error::Dependency(format!("W needs a monotone wave with c > 2, got c = {c}")));
        }
        if !(c1 > 0.0 && c1 < c) {
            return Err(Error::Config(format!("c1 must lie in (0, c = {c}), got {c1}")));
        }
        let n1 = dim.saturating_sub(1) as f64;
        let shift = match plateau {
            Plateau::Symmetric => {
                let lambda = decay_rate(c)?;
                let need = (n1 / (c - c1)).max(n / lambda);
                if rho < need {
                    return Err(Error::Config(format!(
                        "rho = {rho} violates rho >= max((N-1)/(c-c1), n/lambda_c) = {need}"
                    )));
                }
                let mc = wave.tail_sup()?;
                if m / (1.0 + rho.powf(n)) < mc * (-lambda * rho).exp() {
                    return Err(Error::Config(format!(
                        "rho = {rho} violates m/(1+rho^n) >= M_c exp(-lambda_c rho) (M_c = {mc})"
                    )));
                }
                0.0
            }
            Plateau::Shifted { eps_hat } => {
                if !(eps_hat > 0.0 && eps_hat < 0.5) {
                    return Err(Error::Config(format!("eps_hat must lie in (0, 1/2), got {eps_hat}")));
                }
                if c1 + n1 / rho > c {
                    return Err(Error::Config(format!("rho = {rho} violates c1 + (N-1)/rho <= c")));
                }
                wave.position_of_level(1.0 - eps_hat)?
            }
        };
        Ok(RadialSub { wave, c1, rho, epsilon, dim, plateau, shift })
    }

    /// Smallest `ρ` (to 1e-6) satisfying the symmetric-plateau conditions.
    pub fn minimal_rho(wave: &WaveProfile, c1: f64, dim: u32, m: f64, n: f64) -> Result<f64> {
        let lambda = decay_rate(wave.c())?;
        let mc = wave.tail_sup()?;
        let base = (dim.saturating_sub(1) as f64 / (wave.c() - c1)).max(n / lambda);
        let ok = |r: f64| m / (1.0 + r.powf(n)) >= mc * (-lambda * r).exp();
        let mut hi = base.max(1.0);
        while !ok(hi) {
            hi *= 2.0;
            if hi > 1e6 {
                return Err(Error::Config("no rho satisfies the tail condition".into()));
            }
        }
        if ok(base) {
            return Ok(base);
        }
        let mut lo = base;
        while hi - lo > 1e-6 * hi {
            let mid = 0.5 * (lo + hi);
            if ok(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    pub fn profile(&self, s: f64) -> f64 {
        match self.plateau {
            Plateau::Symmetric => self.wave.evaluate(s.abs().max(self.rho)),
            Plateau::Shifted { .. } => self.wave.evaluate((s - self.rho).max(0.0) + self.shift),
        }
    }

    pub fn evaluate(&self, t: f64, x: &[f64]) -> f64 {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        self.profile((r - self.c1 * t) / self.epsilon)
    }

    /// Whether `(t, x)` lies within `width` of a kink of the profile.
    pub fn near_kink(&self, t: f64, x: &[f64], width: f64) -> bool {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let s = r - self.c1 * t;
        let edge = self.epsilon * self.rho;
        match self.plateau {
            Plateau::Symmetric => (s - edge).abs() <= width || (s + edge).abs() <= width,
            Plateau::Shifted { .. } => (s - edge).abs() <= width,
        }
    }
}

/// `ℒᵉ[v] = ∂ₜv − εΔv − v(1−v)/ε` at every node of `grid`, by central
/// differences of step `dt` in time and the grid spacing in space. `v` is
/// evaluated off-grid where the stencil leaves the domain; radial nodes use
/// `Δv = v_rr + (N−1)/r v_r` and `N v_rr` at the origin.
pub fn discrete_residual<F>(v: F, t: f64, dt: f64, grid: &Grid, epsilon: f64) -> Result<Field>
where
    F: Fn(f64, &[f64]) -> f64 + Sync,
{
    if !(dt > 0.0) || t < dt {
        return Err(Error::Domain(format!("residual needs 0 < dt <= t, got dt = {dt}, t = {t}")));
    }
    let h = grid.dx();
    let mode = grid.mode();
    Ok(Field::from_fn(*grid, |x| {
        let u = v(t, x);
        let ut = (v(t + dt, x) - v(t - dt, x)) / (2.0 * dt);
        let lap = match mode {
            GeometryMode::Line => (v(t, &[x[0] + h]) - 2.0 * u + v(t, &[x[0] - h])) / (h * h),
            GeometryMode::Radial { dim } => {
                let r = x[0];
                let (up, um) = (v(t, &[r + h]), v(t, &[(r - h).abs()]));
                if r < 0.5 * h {
                    dim as f64 * (up - 2.0 * u + um) / (h * h)
                } else {
                    (up - 2.0 * u + um) / (h * h) + (dim as f64 - 1.0) / r * (up - um) / (2.0 * h)
                }
            }
            GeometryMode::Plane => {
                (v(t, &[x[0] + h, x[1]]) + v(t, &[x[0] - h, x[1]]) + v(t, &[x[0], x[1] + h]) + v(t, &[x[0], x[1] - h])
                    - 4.0 * u)
                    / (h * h)
            }
        };
        ut - epsilon * lap - u * (1.0 - u) / epsilon
    }))
}
