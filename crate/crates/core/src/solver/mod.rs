//! Strang-split integration of `∂ₜu = εΔu + ε⁻¹u(1−u)` and observable
//! extraction.

mod diffusion;
mod initial;
mod observables;

use std::collections::BTreeMap;
use std::ops::ControlFlow;

use rayon::prelude::*;

pub use diffusion::{default_dt, diffusion_substep, max_mesh_ratio, DiffusionOp};
pub use initial::{build_initial, wave_field, ExpTail, InitialData};
pub use observables::{
    front_on_ray, front_on_rays, front_position, layer_thickness, ray_profile, thickness_on_ray, write_checkpoint,
};

use crate::error::{Error, Result};
use crate::numerics::{Field, GeometryMode, Grid};

/// Boundary condition on the truncated domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Boundary {
    #[default]
    Neumann,
}

/// Scalar observables recorded after every step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Observable {
    /// Outermost crossing of `u = 1/2`.
    Front,
    /// `x(u = ε) − x(u = 1 − 2ε)`.
    Thickness,
    /// `sup u`.
    Sup,
    /// Discrete mass.
    Mass,
}

impl Observable {
    pub fn name(&self) -> &'static str {
        match self {
            Observable::Front => "front",
            Observable::Thickness => "thickness",
            Observable::Sup => "sup",
            Observable::Mass => "mass",
        }
    }

    pub fn parse(name: &str) -> Result<Observable> {
        match name {
            "front" => Ok(Observable::Front),
            "thickness" => Ok(Observable::Thickness),
            "sup" => Ok(Observable::Sup),
            "mass" => Ok(Observable::Mass),
            _ => Err(Error::Config(format!("unknown observable {name:?}"))),
        }
    }

    pub fn measure(&self, field: &Field, epsilon: f64) -> Option<f64> {
        match self {
            Observable::Front => front_position(field, 0.5),
            Observable::Thickness => layer_thickness(field, epsilon),
            Observable::Sup => Some(field.max()),
            Observable::Mass => Some(field.mass()),
        }
    }
}

/// One simulation.
#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub epsilon: f64,
    pub grid: Grid,
    pub initial: InitialData,
    pub t_end: f64,
    pub dt: f64,
    pub checkpoint_times: Vec<f64>,
    pub boundary: Boundary,
    pub record: Vec<Observable>,
}

/// `diam(Ω₀)/2 + 2·t_end + 10·ε|ln ε|`.
pub fn outflow_margin(diameter: f64, t_end: f64, epsilon: f64) -> f64 {
    0.5 * diameter + 2.0 * t_end + 10.0 * crate::eps_log(epsilon)
}

impl SimConfig {
    /// A configuration with the default step, a single checkpoint at `t_end`
    /// and the front position recorded.
    pub fn new(epsilon: f64, grid: Grid, initial: InitialData, t_end: f64) -> SimConfig {
        SimConfig {
            epsilon,
            grid,
            initial,
            t_end,
            dt: default_dt(&grid, epsilon),
            checkpoint_times: vec![t_end],
            boundary: Boundary::Neumann,
            record: vec![Observable::Front],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let eps = self.epsilon;
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::Config(format!("epsilon must lie in (0, 1), got {eps}")));
        }
        let dx = self.grid.dx();
        if dx > eps / 8.0 * (1.0 + 1e-9) {
            return Err(Error::Config(format!("dx = {dx} exceeds epsilon/8 = {}", eps / 8.0)));
        }
        if !(self.dt > 0.0) || self.dt > 0.5 * dx * (1.0 + 1e-12) {
            return Err(Error::Config(format!("dt = {} must lie in (0, dx/2 = {}]", self.dt, 0.5 * dx)));
        }
        let r = eps * self.dt / (dx * dx);
        let r_max = max_mesh_ratio(&self.grid);
        if r > r_max * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "dt = {} gives eps*dt/dx^2 = {r}, above the monotonicity bound {r_max}",
                self.dt
            )));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::Config(format!("t_end must be positive, got {}", self.t_end)));
        }
        if self.checkpoint_times.windows(2).any(|w| !(w[0] < w[1]))
            || self.checkpoint_times.iter().any(|t| !(*t >= 0.0 && *t <= self.t_end))
        {
            return Err(Error::Config("checkpoint times must be increasing and lie in [0, t_end]".into()));
        }
        self.initial.validate()?;
        self.check_margin()
    }

    fn check_margin(&self) -> Result<()> {
        let g = &self.grid;
        let eps = self.epsilon;
        let tiny = 1e-12;
        // (center, half-width reached by the front) for each axis
        let (center, diameter) = match &self.initial {
            InitialData::Compact { body, .. } => {
                initial::check_body_mode(g, body)?;
                (body.center(), body.diameter())
            }
            InitialData::Algebraic { .. } => ([0.0, 0.0], 0.0),
            InitialData::TravellingWave { x0 } => {
                if g.mode() != GeometryMode::Line {
                    return Err(Error::Config("travelling-wave data needs line geometry".into()));
                }
                let xa = g.x_axis();
                let need = outflow_margin(0.0, self.t_end, eps);
                if xa.hi - x0 < need || x0 - xa.lo < 10.0 * crate::eps_log(eps) {
                    return Err(Error::Config(format!(
                        "domain [{}, {}] leaves too little room around the wave at {x0}",
                        xa.lo, xa.hi
                    )));
                }
                return Ok(());
            }
        };
        let need = outflow_margin(diameter, self.t_end, eps);
        let side_ok = |lo: f64, hi: f64, c: f64| {
            hi - c >= need - tiny && (c - lo >= need - tiny || (lo - c).abs() <= tiny)
        };
        let ok = match g.mode() {
            GeometryMode::Line => side_ok(g.x_axis().lo, g.x_axis().hi, center[0]),
            GeometryMode::Radial { .. } => g.x_axis().hi >= need - tiny,
            GeometryMode::Plane => {
                let (xa, ya) = (g.x_axis(), g.y_axis().unwrap());
                side_ok(xa.lo, xa.hi, center[0]) && side_ok(ya.lo, ya.hi, center[1])
            }
        };
        if !ok {
            return Err(Error::Config(format!(
                "domain too small: every direction reached by the front needs extent >= {need}"
            )));
        }
        Ok(())
    }
}

/// Exact logistic flow over `dt/ε` applied pointwise.
fn react(values: &mut [f64], dt: f64, epsilon: f64) -> Result<()> {
    if let Some(v) = values.iter().find(|v| **v < 0.0) {
        return Err(Error::Numerical(format!("reaction step received a negative value {v}")));
    }
    let q = (-dt / epsilon).exp();
    values.par_iter_mut().for_each(|u| {
        if *u != 0.0 {
            *u = *u / (*u + (1.0 - *u) * q);
        }
    });
    Ok(())
}

/// `u ← u·e^{dt/ε} / (1 + u(e^{dt/ε} − 1))`.
pub fn reaction_substep(field: &Field, dt: f64, epsilon: f64) -> Result<Field> {
    let mut values = field.values().to_vec();
    react(&mut values, dt, epsilon)?;
    Field::new(*field.grid(), values)
}

/// One Strang step `R(dt/2) ∘ D(dt) ∘ R(dt/2)`.
pub fn step(field: &Field, dt: f64, epsilon: f64) -> Result<Field> {
    let mut s = Stepper::new(*field.grid(), epsilon);
    let mut f = field.clone();
    s.advance(&mut f, dt)?;
    Ok(f)
}

/// Strang stepper that caches factored diffusion operators per step size.
#[derive(Debug)]
pub struct Stepper {
    grid: Grid,
    epsilon: f64,
    ops: Vec<DiffusionOp>,
}

impl Stepper {
    pub fn new(grid: Grid, epsilon: f64) -> Stepper {
        Stepper { grid, epsilon, ops: Vec::new() }
    }

    fn op(&mut self, dt: f64) -> Result<&DiffusionOp> {
        let pos = match self.ops.iter().position(|o| o.dt() == dt) {
            Some(p) => p,
            None => {
                if self.ops.len() >= 4 {
                    self.ops.remove(1);
                }
                self.ops.push(DiffusionOp::new(&self.grid, self.epsilon, dt)?);
                self.ops.len() - 1
            }
        };
        Ok(&self.ops[pos])
    }

    pub fn advance(&mut self, field: &mut Field, dt: f64) -> Result<()> {
        if field.grid() != &self.grid {
            return Err(Error::Domain("field and stepper grids differ".into()));
        }
        let eps = self.epsilon;
        react(field.values_mut(), 0.5 * dt, eps)?;
        self.op(dt)?.apply(field.values_mut());
        react(field.values_mut(), 0.5 * dt, eps)
    }
}

/// Checkpoints and observable series of one run.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub config: SimConfig,
    pub checkpoints: Vec<(f64, Field)>,
    pub series: BTreeMap<&'static str, Vec<(f64, Option<f64>)>>,
    /// Number of steps taken.
    pub steps: usize,
}

impl Trajectory {
    pub fn final_field(&self) -> Option<&Field> {
        self.checkpoints.last().map(|(_, f)| f)
    }

    pub fn series(&self, obs: Observable) -> Option<&[(f64, Option<f64>)]> {
        self.series.get(obs.name()).map(|v| v.as_slice())
    }
}

pub fn run(config: &SimConfig) -> Result<Trajectory> {
    run_with_observer(config, |_, _| ControlFlow::Continue(()))
}

/// Runs the configuration, calling `observer` at `t = 0` and after every
/// step. A `Break` ends the run early with the trajectory so far.
pub fn run_with_observer<F>(config: &SimConfig, mut observer: F) -> Result<Trajectory>
where
    F: FnMut(f64, &Field) -> ControlFlow<()>,
{
    config.validate()?;
    let eps = config.epsilon;
    let mut field = build_initial(&config.initial, &config.grid, eps)?;
    let bound = field.max().max(1.0) + 1e-8;
    let mut stepper = Stepper::new(config.grid, eps);
    let mut traj = Trajectory {
        config: config.clone(),
        checkpoints: Vec::with_capacity(config.checkpoint_times.len()),
        series: config.record.iter().map(|o| (o.name(), Vec::new())).collect(),
        steps: 0,
    };
    let mut pending = config.checkpoint_times.iter().copied().peekable();
    let mut t = 0.0;
    let record = |t: f64, field: &Field, traj: &mut Trajectory| {
        for o in &config.record {
            traj.series.get_mut(o.name()).unwrap().push((t, o.measure(field, eps)));
        }
    };
    record(t, &field, &mut traj);
    while pending.peek() == Some(&0.0) {
        traj.checkpoints.push((0.0, field.clone()));
        pending.next();
    }
    if observer(t, &field).is_break() {
        return Ok(traj);
    }
    while t < config.t_end {
        let target = pending.peek().copied().unwrap_or(config.t_end);
        let remaining = target - t;
        let (h, landing) = if remaining <= config.dt * (1.0 + 1e-9) { (remaining, true) } else { (config.dt, false) };
        stepper.advance(&mut field, h)?;
        t = if landing { target } else { t + h };
        traj.steps += 1;
        if !field.is_finite() {
            return Err(Error::BlowUp { t, checkpoint: Box::new(field) });
        }
        let sup = field.max();
        if sup > bound {
            return Err(Error::Numerical(format!("sup u = {sup} exceeds the a priori bound {bound} at t={t}")));
        }
        record(t, &field, &mut traj);
        if landing && pending.peek() == Some(&target) {
            traj.checkpoints.push((t, field.clone()));
            pending.next();
        }
        if observer(t, &field).is_break() {
            break;
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ConvexBody;
    use rand::{Rng, SeedableRng};

    fn sup_diff(a: &Field, b: &Field) -> f64 {
        a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn reaction_values() {
        let grid = Grid::line(0.0, 1.0, 0.5).unwrap();
        let eps = 0.1;
        let f = Field::new(grid, vec![0.0, 0.5, 1.0]).unwrap();
        let g = reaction_substep(&f, eps * 3f64.ln(), eps).unwrap();
        assert_eq!(g.values()[0], 0.0);
        assert!((g.values()[1] - 0.75).abs() < 1e-15);
        assert_eq!(g.values()[2], 1.0);
        let neg = Field::new(grid, vec![0.1, -1e-3, 0.2]).unwrap();
        assert!(matches!(reaction_substep(&neg, 0.1, eps), Err(Error::Numerical(_))));
    }

    #[test]
    fn zero_steps_returns_initial() {
        let grid = Grid::line(-2.0, 2.0, 0.0025).unwrap();
        let init = InitialData::Algebraic { m: 0.5, n: 2.0, cap: 0.5 };
        let mut cfg = SimConfig::new(0.02, grid, init.clone(), 0.1);
        cfg.checkpoint_times = vec![0.0, 0.1];
        let mut calls = 0;
        let traj = run_with_observer(&cfg, |_, _| {
            calls += 1;
            ControlFlow::Break(())
        })
        .unwrap();
        assert_eq!(calls, 1);
        assert_eq!(traj.steps, 0);
        assert_eq!(traj.checkpoints[0].1, build_initial(&init, &grid, 0.02).unwrap());
    }

    #[test]
    fn checkpoints_land_exactly() {
        let grid = Grid::line(-2.0, 2.0, 0.0025).unwrap();
        let mut cfg = SimConfig::new(0.02, grid, InitialData::Algebraic { m: 0.5, n: 2.0, cap: 0.5 }, 0.1);
        cfg.checkpoint_times = vec![0.013, 0.05, 0.1];
        cfg.record = vec![Observable::Front, Observable::Sup, Observable::Mass];
        let traj = run(&cfg).unwrap();
        let times: Vec<f64> = traj.checkpoints.iter().map(|c| c.0).collect();
        assert_eq!(times, cfg.checkpoint_times);
        assert!(traj.checkpoints.iter().all(|c| c.1.is_finite()));
        assert_eq!(traj.series(Observable::Sup).unwrap().len(), traj.steps + 1);
    }

    #[test]
    fn config_validation() {
        let eps = 0.02;
        let grid = Grid::line(-2.0, 2.0, 0.0025).unwrap();
        let init = InitialData::Algebraic { m: 0.5, n: 2.0, cap: 0.5 };
        let ok = SimConfig::new(eps, grid, init.clone(), 0.1);
        assert!(ok.validate().is_ok());
        let coarse = SimConfig::new(eps, Grid::line(-2.0, 2.0, 0.01).unwrap(), init.clone(), 0.1);
        assert!(matches!(coarse.validate(), Err(Error::Config(_))));
        let big_dt = SimConfig { dt: 2.0 * ok.dt, ..ok.clone() };
        assert!(big_dt.validate().is_err());
        let long = SimConfig::new(eps, grid, init.clone(), 0.7);
        assert!(long.validate().is_err());
        let body = ConvexBody::ball([0.0, 0.0], 0.3).unwrap();
        let wrong = SimConfig::new(
            eps,
            grid,
            InitialData::Compact { body, amplitude: 0.5, width: 0.1, tail: None },
            0.1,
        );
        assert!(wrong.validate().is_err());
        let mut unsorted = ok.clone();
        unsorted.checkpoint_times = vec![0.05, 0.02];
        assert!(unsorted.validate().is_err());
    }

    #[test]
    fn strang_order() {
        // smooth algebraic data, three step sizes, one grid
        let eps = 0.05;
        let grid = Grid::line(-1.0, 1.0, eps / 8.0).unwrap();
        let u0 = Field::from_fn(grid, |x| 0.6 / (1.0 + (x[0] / (4.0 * eps)).powi(2)));
        let t_end = 0.05;
        let dt0 = default_dt(&grid, eps);
        let solve = |dt: f64| {
            let n = (t_end / dt).round() as usize;
            let mut s = Stepper::new(grid, eps);
            let mut f = u0.clone();
            for _ in 0..n {
                s.advance(&mut f, dt).unwrap();
            }
            f
        };
        let dt = t_end / (t_end / dt0).ceil();
        let (a, b, c) = (solve(dt), solve(dt / 2.0), solve(dt / 4.0));
        let order = (sup_diff(&a, &b) / sup_diff(&b, &c)).log2();
        assert!(order >= 1.8, "observed order {order}");
    }

    #[test]
    fn comparison_preserved() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let eps = 0.05;
        for grid in [Grid::line(-1.0, 1.0, eps / 8.0).unwrap(), Grid::radial(3, 1.0, eps / 8.0).unwrap()] {
            for _ in 0..5 {
                let lo: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(0.0..1.2)).collect();
                let hi: Vec<f64> = lo.iter().map(|v| v + rng.gen_range(0.0..0.3)).collect();
                let mut a = Field::new(grid, lo).unwrap();
                let mut b = Field::new(grid, hi).unwrap();
                let mut s = Stepper::new(grid, eps);
                let dt = default_dt(&grid, eps);
                for _ in 0..30 {
                    s.advance(&mut a, dt).unwrap();
                    s.advance(&mut b, dt).unwrap();
                    assert!(a.values().iter().zip(b.values()).all(|(x, y)| x <= y));
                    assert!(a.min() >= 0.0);
                }
            }
        }
    }

    #[test]
    fn sup_bound_after_generation() {
        let eps = 0.02;
        let grid = Grid::line(-2.0, 2.0, eps / 8.0).unwrap();
        let body = ConvexBody::interval(-0.3, 0.3).unwrap();
        let init = InitialData::Compact { body, amplitude: 0.6, width: 0.1, tail: None };
        let mut cfg = SimConfig::new(eps, grid, init, 0.3);
        cfg.record = vec![Observable::Sup];
        let traj = run(&cfg).unwrap();
        let t_gen = eps * eps.ln().abs();
        for (t, s) in traj.series(Observable::Sup).unwrap() {
            assert!(s.unwrap() <= 1.0 + 1e-8);
            if *t >= t_gen {
                assert!(s.unwrap() <= 1.0 + eps + 1e-8);
            }
        }
    }

    #[test]
    fn radial_matches_plane() {
        let eps = 0.02;
        let dx = eps / 8.0;
        let body = ConvexBody::ball([0.0, 0.0], 0.2).unwrap();
        let init = InitialData::Compact { body, amplitude: 0.9, width: 0.05, tail: None };
        let t_end = 0.05;
        let radial = SimConfig::new(eps, Grid::radial(2, 1.2, dx).unwrap(), init.clone(), t_end);
        let plane = SimConfig::new(eps, Grid::plane((0.0, 1.2), (0.0, 1.2), dx).unwrap(), init, t_end);
        let plane = SimConfig { dt: radial.dt, ..plane };
        let fr = run(&radial).unwrap();
        let fp = run(&plane).unwrap();
        let (ur, up) = (fr.final_field().unwrap(), fp.final_field().unwrap());
        let mut err = 0.0f64;
        for angle in [0.0, 0.3, std::f64::consts::FRAC_PI_4] {
            let (s, u) = ray_profile(up, [0.0, 0.0], angle).unwrap();
            for (r, v) in s.iter().zip(&u) {
                if *r <= 1.2 {
                    err = err.max((ur.interpolate(&[*r]).unwrap() - v).abs());
                }
            }
        }
        assert!(err < 5e-3, "radial vs plane {err}");
    }
}
