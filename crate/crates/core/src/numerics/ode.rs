//! Adaptive Dormand–Prince 5(4) integration for small autonomous systems.
//!
//! Besides plain integration to a target time, the integrator can land
//! exactly on a prescribed sequence of output times and can locate the first
//! sign change of a scalar event function.

use crate::error::{Error, Result};

const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0];
const B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on the step magnitude.
    pub h_max: f64,
    /// Step underflow threshold.
    pub h_min: f64,
    pub max_steps: usize,
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> OdeOptions {
        OdeOptions { rtol: tol, atol: tol, h_max: f64::INFINITY, h_min: 1e-14, max_steps: 5_000_000 }
    }
}

/// Adaptive integrator state for `y' = f(y)` (autonomous; the time is tracked
/// only for bookkeeping).
pub struct Dopri<const N: usize, F> {
    f: F,
    t: f64,
    y: [f64; N],
    h: f64,
    opts: OdeOptions,
    steps: usize,
}

#[inline]
fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(&[f64; N], f64)]) -> [f64; N] {
    let mut out = *y;
    for (k, a) in terms {
        if *a != 0.0 {
            for i in 0..N {
                out[i] += h * a * k[i];
            }
        }
    }
    out
}

impl<const N: usize, F> Dopri<N, F>
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    pub fn new(f: F, t0: f64, y0: [f64; N], opts: OdeOptions) -> Self {
        let h0 = opts.h_max.min(1e-2);
        Dopri { f, t: t0, y: y0, h: h0, opts, steps: 0 }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> [f64; N] {
        self.y
    }

    pub fn rhs(&self, y: &[f64; N]) -> [f64; N] {
        (self.f)(y)
    }

    /// One explicit step of size `h` from `(y)`: 5th-order solution and the
    /// embedded error estimate.
    pub fn trial_step(&self, y: &[f64; N], h: f64) -> ([f64; N], [f64; N]) {
        let f = &self.f;
        let k1 = f(y);
        let k2 = f(&axpy(y, h, &[(&k1, A2[0])]));
        let k3 = f(&axpy(y, h, &[(&k1, A3[0]), (&k2, A3[1])]));
        let k4 = f(&axpy(y, h, &[(&k1, A4[0]), (&k2, A4[1]), (&k3, A4[2])]));
        let k5 = f(&axpy(y, h, &[(&k1, A5[0]), (&k2, A5[1]), (&k3, A5[2]), (&k4, A5[3])]));
        let k6 = f(&axpy(y, h, &[(&k1, A6[0]), (&k2, A6[1]), (&k3, A6[2]), (&k4, A6[3]), (&k5, A6[4])]));
        let y5 = axpy(y, h, &[(&k1, B[0]), (&k3, B[2]), (&k4, B[3]), (&k5, B[4]), (&k6, B[5])]);
        let k7 = f(&y5);
        let mut err = [0.0; N];
        for i in 0..N {
            err[i] = h * (E[0] * k1[i] + E[2] * k3[i] + E[3] * k4[i] + E[4] * k5[i] + E[5] * k6[i] + E[6] * k7[i]);
        }
        (y5, err)
    }

    fn error_norm(&self, y0: &[f64; N], y1: &[f64; N], err: &[f64; N]) -> f64 {
        let mut s = 0.0;
        for i in 0..N {
            let sc = self.opts.atol + self.opts.rtol * y0[i].abs().max(y1[i].abs());
            s += (err[i] / sc).powi(2);
        }
        (s / N as f64).sqrt()
    }

    /// Takes one accepted step of at most `|h_cap|` in direction `sign(h_cap)`.
    /// Returns the size of the accepted step.
    fn accepted_step(&mut self, h_cap: f64) -> Result<f64> {
        let dir = h_cap.signum();
        let proposal = self.h.abs().min(self.opts.h_max);
        let mut h = proposal.min(h_cap.abs());
        let clipped = h < proposal;
        loop {
            if h < self.opts.h_min * self.t.abs().max(1.0) && h < h_cap.abs() {
                return Err(Error::Numerical(format!("step size underflow at t={}", self.t)));
            }
            self.steps += 1;
            if self.steps > self.opts.max_steps {
                return Err(Error::Numerical(format!("step budget exhausted at t={}", self.t)));
            }
            let (y1, err) = self.trial_step(&self.y, dir * h);
            if y1.iter().any(|v| !v.is_finite()) {
                h *= 0.25;
                self.h = h;
                continue;
            }
            let en = self.error_norm(&self.y, &y1, &err);
            if en <= 1.0 {
                self.y = y1;
                self.t += dir * h;
                let fac = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
                // a landing step shortened by the cap says nothing about the
                // achievable step size, so the previous proposal survives it
                self.h = if clipped { proposal.max(h * fac) } else { h * fac }.min(self.opts.h_max);
                return Ok(h);
            }
            h *= (0.9 * en.powf(-0.2)).clamp(0.1, 0.9);
            self.h = h;
        }
    }

    /// Integrates to exactly `t_target` (either direction).
    pub fn advance_to(&mut self, t_target: f64) -> Result<[f64; N]> {
        loop {
            let rem = t_target - self.t;
            if rem.abs() <= 1e-15 * t_target.abs().max(1.0) {
                self.t = t_target;
                return Ok(self.y);
            }
            let h = self.accepted_step(rem)?;
            if (h - rem.abs()).abs() <= 1e-15 * t_target.abs().max(1.0) {
                self.t = t_target;
                return Ok(self.y);
            }
        }
    }

    /// Integrates towards `t_max` and stops at the first time the event
    /// function changes sign from its initial value. The crossing is located
    /// by bisection on single sub-steps from the start of the bracketing step.
    /// Returns `None` if no crossing occurs before `t_max`.
    pub fn advance_until<G>(&mut self, t_max: f64, event: G) -> Result<Option<(f64, [f64; N])>>
    where
        G: Fn(&[f64; N]) -> f64,
    {
        let g0 = event(&self.y);
        if g0 == 0.0 {
            return Ok(Some((self.t, self.y)));
        }
        loop {
            let rem = t_max - self.t;
            if rem.abs() <= 1e-15 * t_max.abs().max(1.0) {
                return Ok(None);
            }
            let (t_prev, y_prev) = (self.t, self.y);
            let h = self.accepted_step(rem)?;
            let g1 = event(&self.y);
            if g1 == 0.0 {
                return Ok(Some((self.t, self.y)));
            }
            if g1.signum() != g0.signum() {
                let dir = rem.signum();
                let (mut lo, mut hi) = (0.0, h);
                for _ in 0..200 {
                    if hi - lo <= 1e-15 * (t_prev.abs().max(1.0)) {
                        break;
                    }
                    let mid = 0.5 * (lo + hi);
                    let (ym, _) = self.trial_step(&y_prev, dir * mid);
                    if event(&ym).signum() == g0.signum() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let (y_at, _) = self.trial_step(&y_prev, dir * hi);
                self.t = t_prev + dir * hi;
                self.y = y_at;
                return Ok(Some((self.t, self.y)));
            }
        }
    }
}

/// Convenience: integrate `y' = f(y)` from `y0` over a time span `span`.
pub fn integrate<const N: usize, F>(f: F, y0: [f64; N], span: f64, opts: OdeOptions) -> Result<[f64; N]>
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    let mut d = Dopri::new(f, 0.0, y0, opts);
    d.advance_to(span)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let y = integrate(|y: &[f64; 1]| [-y[0]], [1.0], 5.0, OdeOptions::with_tol(1e-12)).unwrap();
        assert!((y[0] - (-5.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn harmonic_oscillator_backwards() {
        let f = |y: &[f64; 2]| [y[1], -y[0]];
        let y = integrate(f, [0.0, 1.0], -2.0, OdeOptions::with_tol(1e-12)).unwrap();
        assert!((y[0] - (-2.0f64).sin()).abs() < 1e-10);
        assert!((y[1] - (-2.0f64).cos()).abs() < 1e-10);
    }

    #[test]
    fn event_location() {
        // y = cos t crosses zero at pi/2
        let mut d = Dopri::new(|y: &[f64; 2]| [y[1], -y[0]], 0.0, [1.0, 0.0], OdeOptions::with_tol(1e-12));
        let (t, y) = d.advance_until(10.0, |y| y[0]).unwrap().unwrap();
        assert!((t - std::f64::consts::FRAC_PI_2).abs() < 1e-10, "{t}");
        assert!(y[0].abs() < 1e-10);
    }

    #[test]
    fn no_event_returns_none() {
        let mut d = Dopri::new(|y: &[f64; 1]| [-y[0]], 0.0, [1.0], OdeOptions::with_tol(1e-10));
        assert!(d.advance_until(3.0, |y| y[0] - 0.01).unwrap().is_none());
        assert!((d.t() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn lands_on_output_times() {
        let mut d = Dopri::new(|y: &[f64; 1]| [y[0]], 0.0, [1.0], OdeOptions { h_max: 0.3, ..OdeOptions::with_tol(1e-12) });
        for k in 1..=10 {
            let t = 0.1 * k as f64;
            let y = d.advance_to(t).unwrap();
            assert!((y[0] - t.exp()).abs() < 1e-11 * t.exp());
        }
    }
}
