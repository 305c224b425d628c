//! The logistic reaction, its bistable extension `f̄`, the ε-modified
//! nonlinearity `f̄ε`, and the semiflow `w(s, ξ)` of `dw/ds = f̄ε(w)` together
//! with its first two ξ-derivatives.

use crate::eps_log;
use crate::error::{Error, Result};
use crate::numerics::ode::{Dopri, OdeOptions};

/// Local tolerance of every semiflow integration.
pub const SEMIFLOW_TOL: f64 = 1e-10;

/// Quintic smoothstep: `S(0)=0`, `S(1)=1`, first and second derivatives vanish
/// at both ends.
#[inline]
fn smoothstep(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if t >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let t2 = t * t;
    let v = t2 * t * (10.0 - 15.0 * t + 6.0 * t2);
    let d1 = 30.0 * t2 * (1.0 - t) * (1.0 - t);
    let d2 = 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t);
    (v, d1, d2)
}

/// Exact solution of `z' = z(1 − z)`, `z(0) = xi`, for `xi ∈ [0, 1]`.
pub fn logistic_flow(xi: f64, s: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&xi) {
        return Err(Error::Domain(format!("logistic_flow needs xi in [0,1], got {xi}")));
    }
    if s < 0.0 {
        return Err(Error::Domain(format!("logistic_flow needs s >= 0, got {s}")));
    }
    if xi == 0.0 {
        return Ok(0.0);
    }
    Ok(xi / (xi + (1.0 - xi) * (-s).exp()))
}

/// Bistable extension of `u(1−u)` with the default knee at `u = −1/2`.
pub fn fbar(u: f64) -> f64 {
    fbar_with_knee(u, -0.5).0
}

/// `f̄(u) = u(1−u) q(u)` with `q = 1` above `knee` and
/// `q(u) = 1 − (1 − (u+1)/(1+knee))³` below it. Returns `(f̄, f̄′, f̄″)`.
fn fbar_with_knee(u: f64, knee: f64) -> (f64, f64, f64) {
    let h = u * (1.0 - u);
    let h1 = 1.0 - 2.0 * u;
    let h2 = -2.0;
    if u >= knee {
        return (h, h1, h2);
    }
    let scale = 1.0 / (1.0 + knee);
    let p = 1.0 - (u + 1.0) * scale;
    let q = 1.0 - p * p * p;
    let q1 = 3.0 * p * p * scale;
    let q2 = -6.0 * p * scale * scale;
    (h * q, h1 * q + h * q1, h2 * q + 2.0 * h1 * q1 + h * q2)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KineticsParams {
    /// Layer-thickness parameter ε, in `(0, 1/e)`.
    pub epsilon: f64,
    /// `ψ = 1` on `[0, cutoff_inner]`.
    pub cutoff_inner: f64,
    /// `ψ = 0` above `cutoff_outer`.
    pub cutoff_outer: f64,
    /// Point below which the bistable extension departs from `u(1−u)`.
    pub extension_knee: f64,
}

impl KineticsParams {
    pub fn new(epsilon: f64) -> KineticsParams {
        KineticsParams { epsilon, cutoff_inner: 0.25, cutoff_outer: 0.5, extension_knee: -0.5 }
    }
}

/// Sample count of the construction-time check `f̄ε ≤ f̄` on `[−2, 2]`.
const FEP_SAMPLES: usize = 10_000;

/// Validated kinetics for one ε.
///
/// The cutoff `ψ` equals one on `[0, cutoff_inner]`, falls to zero across
/// `[cutoff_inner, cutoff_outer]`, and on the negative side rises from zero at
/// `u = −ε` to one at `u = 0`. Where `ψ > 0` the linear branch
/// `(u − ε|ln ε|)/|ln ε|` lies below `f̄`, which is what `f̄ε ≤ f̄` needs.
#[derive(Clone, Debug)]
pub struct Kinetics {
    params: KineticsParams,
    ln_abs: f64,
    eps_log: f64,
    negative_width: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SemiflowState {
    pub w: f64,
    pub w_xi: f64,
    pub w_xixi: f64,
}

/// Measured generation constant of the semiflow (see [`Kinetics::generation_alpha`]).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GenerationAlpha {
    pub alpha: f64,
    /// Time for `w(·, 3ε|ln ε|)` to reach `1 − ε`.
    pub s_lower: f64,
    /// Time for `w(·, xi_max)` to fall to `1 + ε` (zero if it starts below).
    pub s_upper: f64,
}

impl Kinetics {
    pub fn new(params: KineticsParams) -> Result<Kinetics> {
        let eps = params.epsilon;
        if !(eps > 0.0 && eps < (-1.0f64).exp()) {
            return Err(Error::Config(format!("epsilon must lie in (0, 1/e), got {eps}")));
        }
        if !(0.0 < params.cutoff_inner && params.cutoff_inner < params.cutoff_outer) {
            return Err(Error::Config(format!(
                "cutoff radii must satisfy 0 < inner < outer, got {} and {}",
                params.cutoff_inner, params.cutoff_outer
            )));
        }
        if !(-1.0 < params.extension_knee && params.extension_knee < 0.0) {
            return Err(Error::Config(format!("extension knee must lie in (-1, 0), got {}", params.extension_knee)));
        }
        let kin = Kinetics { params, ln_abs: eps.ln().abs(), eps_log: eps_log(eps), negative_width: eps };
        if kin.eps_log >= params.cutoff_inner {
            return Err(Error::Config(format!(
                "epsilon too large: eps|ln eps| = {} is not below cutoff_inner = {}",
                kin.eps_log, params.cutoff_inner
            )));
        }
        for k in 0..FEP_SAMPLES {
            let u = -2.0 + 4.0 * k as f64 / (FEP_SAMPLES - 1) as f64;
            let (fe, f) = (kin.fbar_eps(u), kin.fbar(u));
            if fe > f + 1e-14 * f.abs().max(1.0) {
                return Err(Error::Config(format!(
                    "modified nonlinearity exceeds fbar at u={u} ({fe} > {f}); epsilon too large"
                )));
            }
        }
        Ok(kin)
    }

    pub fn with_epsilon(epsilon: f64) -> Result<Kinetics> {
        Kinetics::new(KineticsParams::new(epsilon))
    }

    pub fn params(&self) -> &KineticsParams {
        &self.params
    }

    pub fn epsilon(&self) -> f64 {
        self.params.epsilon
    }

    /// `|ln ε|`.
    pub fn ln_abs(&self) -> f64 {
        self.ln_abs
    }

    /// `ε|ln ε|`, the positive zero of `f̄ε`.
    pub fn eps_log(&self) -> f64 {
        self.eps_log
    }

    pub fn fbar(&self, u: f64) -> f64 {
        fbar_with_knee(u, self.params.extension_knee).0
    }

    /// `(ψ, ψ′, ψ″)`.
    fn cutoff(&self, u: f64) -> (f64, f64, f64) {
        let p = &self.params;
        if u >= 0.0 {
            let w = p.cutoff_outer - p.cutoff_inner;
            let (s, d1, d2) = smoothstep((u - p.cutoff_inner) / w);
            (1.0 - s, -d1 / w, -d2 / (w * w))
        } else {
            let w = self.negative_width;
            let (s, d1, d2) = smoothstep((u + w) / w);
            (s, d1 / w, d2 / (w * w))
        }
    }

    /// `(f̄ε, f̄ε′, f̄ε″)`.
    pub fn fbar_eps_derivs(&self, u: f64) -> (f64, f64, f64) {
        let (f, f1, f2) = fbar_with_knee(u, self.params.extension_knee);
        let (psi, psi1, psi2) = self.cutoff(u);
        let lin = (u - self.eps_log) / self.ln_abs;
        let lin1 = 1.0 / self.ln_abs;
        let gap = lin - f;
        let gap1 = lin1 - f1;
        let gap2 = -f2;
        (f + psi * gap, f1 + psi1 * gap + psi * gap1, f2 + psi2 * gap + 2.0 * psi1 * gap1 + psi * gap2)
    }

    pub fn fbar_eps(&self, u: f64) -> f64 {
        self.fbar_eps_derivs(u).0
    }

    fn flow_options(&self) -> OdeOptions {
        OdeOptions::with_tol(SEMIFLOW_TOL)
    }

    /// `w(s, xi)`.
    pub fn semiflow(&self, s: f64, xi: f64) -> Result<f64> {
        check_time(s)?;
        if s == 0.0 {
            return Ok(xi);
        }
        let mut d = Dopri::new(|y: &[f64; 1]| [self.fbar_eps(y[0])], 0.0, [xi], self.flow_options());
        Ok(d.advance_to(s)?[0])
    }

    /// `w` together with `w_ξ` and `w_ξξ`, integrated as one system of the
    /// state and its first and second variational equations.
    pub fn semiflow_sensitivity(&self, s: f64, xi: f64) -> Result<SemiflowState> {
        check_time(s)?;
        let rhs = |y: &[f64; 3]| {
            let (f, f1, f2) = self.fbar_eps_derivs(y[0]);
            [f, f1 * y[1], f2 * y[1] * y[1] + f1 * y[2]]
        };
        let mut d = Dopri::new(rhs, 0.0, [xi, 1.0, 0.0], self.flow_options());
        let y = d.advance_to(s)?;
        Ok(SemiflowState { w: y[0], w_xi: y[1], w_xixi: y[2] })
    }

    /// First time `w(·, xi)` reaches `level`, or `None` before `s_max`.
    pub fn hitting_time(&self, xi: f64, level: f64, s_max: f64) -> Result<Option<f64>> {
        let mut d = Dopri::new(|y: &[f64; 1]| [self.fbar_eps(y[0])], 0.0, [xi], self.flow_options());
        Ok(d.advance_until(s_max, |y| y[0] - level)?.map(|(s, _)| s))
    }

    /// `s_ε(ξ) = |ln ε| · |ln(1 − ξ/(ε|ln ε|))|`, the time after which `w(·, ξ)`
    /// leaves the positive half-line when `0 < ξ < ε|ln ε|`.
    pub fn positivity_time(&self, xi: f64) -> Result<f64> {
        if !(xi > 0.0 && xi < self.eps_log) {
            return Err(Error::Domain(format!(
                "positivity_time needs 0 < xi < eps|ln eps| = {}, got {xi}",
                self.eps_log
            )));
        }
        Ok(self.ln_abs * (1.0 - xi / self.eps_log).ln().abs())
    }

    /// Smallest `α` such that for `s ≥ α|ln ε|`
    /// `w(s, ξ) ≥ 1 − ε` on `[3ε|ln ε|, xi_max]` and `w(s, ξ) ≤ 1 + ε` on
    /// `[ε|ln ε|, xi_max]`. Monotonicity in ξ reduces both conditions to the
    /// two extreme trajectories.
    pub fn generation_alpha(&self, xi_max: f64) -> Result<GenerationAlpha> {
        let eps = self.epsilon();
        let s_cap = 50.0 * self.ln_abs.powi(2);
        let s_lower = self
            .hitting_time(3.0 * self.eps_log, 1.0 - eps, s_cap)?
            .ok_or_else(|| Error::Numerical("semiflow from 3 eps|ln eps| never reached 1-eps".into()))?;
        let s_upper = if xi_max > 1.0 + eps {
            self.hitting_time(xi_max, 1.0 + eps, s_cap)?
                .ok_or_else(|| Error::Numerical("semiflow from above never reached 1+eps".into()))?
        } else {
            0.0
        };
        Ok(GenerationAlpha { alpha: s_lower.max(s_upper) / self.ln_abs, s_lower, s_upper })
    }
}

fn check_time(s: f64) -> Result<()> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::Domain(format!("semiflow time must be finite and >= 0, got {s}")));
    }
    Ok(())
}
