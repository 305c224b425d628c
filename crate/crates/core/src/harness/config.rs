//! Experiment configuration: a TOML file with the sections `kinetics`,
//! `wave`, `geometry`, `initial`, `solver` and `study`. Unknown keys are
//! rejected.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::ConvexBody;
use crate::kinetics::{Kinetics, KineticsParams};
use crate::numerics::Grid;
use crate::solver::{default_dt, ExpTail, InitialData, Observable, SimConfig};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub kinetics: KineticsSection,
    #[serde(default)]
    pub wave: WaveSection,
    #[serde(default)]
    pub geometry: GeometrySection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub study: StudySection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KineticsSection {
    pub cutoff_inner: f64,
    pub cutoff_outer: f64,
    pub extension_knee: f64,
}

impl Default for KineticsSection {
    fn default() -> Self {
        let p = KineticsParams::new(0.1);
        KineticsSection { cutoff_inner: p.cutoff_inner, cutoff_outer: p.cutoff_outer, extension_knee: p.extension_knee }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WaveSection {
    /// Speeds solved by the `wave` subcommand.
    pub speeds: Vec<f64>,
    pub dz: f64,
    pub z_span: f64,
}

impl Default for WaveSection {
    fn default() -> Self {
        WaveSection { speeds: vec![2.0, 2.2, 2.5, 3.0], dz: crate::waves::DEFAULT_DZ, z_span: crate::waves::DEFAULT_Z_SPAN }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    #[default]
    Line,
    Radial,
    Plane,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometrySection {
    pub mode: ModeName,
    /// Space dimension in radial mode.
    pub dim: u32,
    /// Line extent.
    pub lo: f64,
    pub hi: f64,
    /// Radial extent `[0, r_max]`.
    pub r_max: f64,
    /// Plane extents.
    pub x: [f64; 2],
    pub y: [f64; 2],
    /// `dx = ε / cells_per_eps`.
    pub cells_per_eps: f64,
}

impl Default for GeometrySection {
    fn default() -> Self {
        GeometrySection {
            mode: ModeName::Line,
            dim: 2,
            lo: 0.0,
            hi: 4.0,
            r_max: 3.0,
            x: [0.0, 1.5],
            y: [0.0, 1.5],
            cells_per_eps: 8.0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialKind {
    #[default]
    Compact,
    Algebraic,
    Wave,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BodyKind {
    #[default]
    Interval,
    Ball,
    Ellipse,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialSection {
    pub kind: InitialKind,
    pub body: BodyKind,
    /// Interval `[a, b]`.
    pub interval: [f64; 2],
    pub center: [f64; 2],
    pub radius: f64,
    pub semi_axes: [f64; 2],
    pub amplitude: f64,
    pub width: f64,
    /// Optional exponential tail `M e^{−λ‖x‖/ε}`; both or neither.
    pub tail_lambda: Option<f64>,
    pub tail_m: Option<f64>,
    /// Algebraic family `m / (1 + ‖x‖ⁿ/εⁿ)` capped at `cap` (default `m`).
    pub m: f64,
    pub n: f64,
    pub cap: Option<f64>,
    /// Wave position for `kind = "wave"`.
    pub x0: f64,
}

impl Default for InitialSection {
    fn default() -> Self {
        InitialSection {
            kind: InitialKind::Compact,
            body: BodyKind::Interval,
            interval: [-0.5, 0.5],
            center: [0.0, 0.0],
            radius: 0.5,
            semi_axes: [0.5, 0.3],
            amplitude: 0.9,
            width: 0.1,
            tail_lambda: None,
            tail_m: None,
            m: 0.5,
            n: 2.0,
            cap: None,
            x0: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub t_end: f64,
    /// Fixed step; the stable default `min(dx/2, r_max dx²/ε)` when absent.
    pub dt: Option<f64>,
    /// Extra checkpoints for `simulate` (`t_end` is always one).
    pub checkpoints: Vec<f64>,
    pub record: Vec<String>,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection { t_end: 1.0, dt: None, checkpoints: Vec::new(), record: vec!["front".into()] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StudySection {
    pub epsilons: Vec<f64>,
    /// Speed fit window `[fit_window · t_end, t_end]`.
    pub fit_window: f64,
    /// Generation threshold `g ≥ k ε|ln ε|`.
    pub generation_k: f64,
    /// No-interface probe `(t₀, ‖x₀‖)`.
    pub probe: [f64; 2],
    /// Compact control of the no-interface study: a ball at the origin.
    pub control_radius: f64,
    pub control_amplitude: f64,
    pub control_width: f64,
    /// Overrides `K̂` of the global super-solution (default `K₀`).
    pub k_hat: Option<f64>,
    pub m2: f64,
    /// Ordering slack is `max(slack_floor, slack_cells · dx)`.
    pub slack_floor: f64,
    pub slack_cells: f64,
    pub residual_tol: f64,
    /// Refinement of the residual grid relative to the run grid.
    pub residual_refine: f64,
    /// Checkpoints inside `[0, t^ε]` and inside `[t^ε, t_end]`.
    pub generation_samples: usize,
    pub motion_samples: usize,
    /// Radial sub-solution `W`: wave speed `c > 2` and front speed `c₁`.
    pub w_speed: f64,
    pub w_c1: f64,
    pub w_r_max: f64,
}

impl Default for StudySection {
    fn default() -> Self {
        StudySection {
            epsilons: vec![0.04, 0.02, 0.01],
            fit_window: 0.2,
            generation_k: 3.0,
            probe: [0.5, 2.0],
            control_radius: 0.5,
            control_amplitude: 0.5,
            control_width: 0.1,
            k_hat: None,
            m2: 1.0,
            slack_floor: 1e-3,
            slack_cells: 5.0,
            residual_tol: 5e-3,
            residual_refine: 2.0,
            generation_samples: 8,
            motion_samples: 10,
            w_speed: 2.5,
            w_c1: 1.0,
            w_r_max: 2.5,
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Config> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Config> {
        Config::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Canonical TOML rendering (defaults filled in).
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical rendering, hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn kinetics(&self, epsilon: f64) -> Result<Kinetics> {
        Kinetics::new(KineticsParams {
            epsilon,
            cutoff_inner: self.kinetics.cutoff_inner,
            cutoff_outer: self.kinetics.cutoff_outer,
            extension_knee: self.kinetics.extension_knee,
        })
    }

    pub fn grid(&self, epsilon: f64) -> Result<Grid> {
        let g = &self.geometry;
        if !(g.cells_per_eps > 0.0) {
            return Err(Error::Config(format!("cells_per_eps must be positive, got {}", g.cells_per_eps)));
        }
        let dx = epsilon / g.cells_per_eps;
        match g.mode {
            ModeName::Line => Grid::line(g.lo, g.hi, dx),
            ModeName::Radial => Grid::radial(g.dim, g.r_max, dx),
            ModeName::Plane => Grid::plane((g.x[0], g.x[1]), (g.y[0], g.y[1]), dx),
        }
        .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn body(&self) -> Result<ConvexBody> {
        let i = &self.initial;
        match i.body {
            BodyKind::Interval => ConvexBody::interval(i.interval[0], i.interval[1]),
            BodyKind::Ball => ConvexBody::ball(i.center, i.radius),
            BodyKind::Ellipse => ConvexBody::ellipse(i.center, i.semi_axes),
        }
        .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn initial_data(&self) -> Result<InitialData> {
        let i = &self.initial;
        let data = match i.kind {
            InitialKind::Compact => {
                let tail = match (i.tail_lambda, i.tail_m) {
                    (Some(lambda), Some(m)) => Some(ExpTail { lambda, m }),
                    (None, None) => None,
                    _ => return Err(Error::Config("tail_lambda and tail_m must be given together".into())),
                };
                InitialData::Compact { body: self.body()?, amplitude: i.amplitude, width: i.width, tail }
            }
            InitialKind::Algebraic => InitialData::Algebraic { m: i.m, n: i.n, cap: i.cap.unwrap_or(i.m) },
            InitialKind::Wave => InitialData::TravellingWave { x0: i.x0 },
        };
        data.validate()?;
        Ok(data)
    }

    pub fn record(&self) -> Result<Vec<Observable>> {
        self.solver.record.iter().map(|s| Observable::parse(s)).collect()
    }

    /// Solver configuration for one ε with the given checkpoints.
    pub fn sim_config(&self, epsilon: f64, checkpoints: Vec<f64>) -> Result<SimConfig> {
        let grid = self.grid(epsilon)?;
        let mut sim = SimConfig::new(epsilon, grid, self.initial_data()?, self.solver.t_end);
        sim.dt = self.solver.dt.unwrap_or_else(|| default_dt(&grid, epsilon));
        sim.checkpoint_times = checkpoints;
        sim.record = self.record()?;
        sim.validate()?;
        Ok(sim)
    }

    /// The ε ladder, checked.
    pub fn epsilons(&self, min_len: usize) -> Result<Vec<f64>> {
        let e = &self.study.epsilons;
        if e.len() < min_len {
            return Err(Error::Usage(format!("study needs at least {min_len} epsilon values, got {}", e.len())));
        }
        if let Some(bad) = e.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
            return Err(Error::Config(format!("epsilon {bad} outside (0, 1)")));
        }
        let mut sorted = e.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("repeated epsilon in the ladder".into()));
        }
        Ok(sorted)
    }
}
