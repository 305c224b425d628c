//! The experiments: waves, plain simulation, front speed, layer thickness,
//! generation time, absence of an interface, and the barrier sandwich.

use std::ops::ControlFlow;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use super::config::{Config, InitialKind, ModeName};
use super::report::{linear_fit, proportional_fit, Cell, Check, ExperimentReport, Fit};
use super::svg::{line_plot, Axes, Series};
use crate::barriers::{
    discrete_residual, fit_m1, generation_drift, generation_sub, generation_super, global_super, k0_lower_bound,
    m2_recipe, measured_tube_constant, motion_speed, tube_constant_floor, xi_eps, MotionSub, Plateau, RadialSub,
};
use crate::eps_log;
use crate::error::{Error, Result};
use crate::geometry::{ConvexBody, CutoffDistance};
use crate::numerics::{Field, GeometryMode, Grid};
use crate::solver::{
    layer_thickness, run, run_with_observer, write_checkpoint, InitialData, Observable, SimConfig,
    Trajectory,
};
use crate::waves::{decay_rate, solve_sign_changing_wave, solve_wave, WaveProfile};

/// A report plus the auxiliary files a study produces.
#[derive(Clone, Debug)]
pub struct StudyOutput {
    pub report: ExperimentReport,
    /// `(file name, svg text)`.
    pub plots: Vec<(String, String)>,
    /// `(relative path, contents)`.
    pub files: Vec<(String, String)>,
}

impl StudyOutput {
    fn new(report: ExperimentReport) -> StudyOutput {
        StudyOutput { report, plots: Vec::new(), files: Vec::new() }
    }

    pub fn write(&self, dir: &Path, svg: bool) -> Result<()> {
        self.report.write(dir)?;
        for (name, text) in &self.files {
            let p = dir.join(name);
            if let Some(parent) = p.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(p, text)?;
        }
        if svg {
            for (name, text) in &self.plots {
                std::fs::write(dir.join(name), text)?;
            }
        }
        Ok(())
    }
}

fn spread(v: &[f64]) -> f64 {
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
    if max == 0.0 && min == 0.0 {
        1.0
    } else {
        max / min
    }
}

fn eps_label(e: f64) -> String {
    format!("eps={e}")
}

fn dimension(grid: &Grid) -> u32 {
    match grid.mode() {
        GeometryMode::Line => 1,
        GeometryMode::Radial { dim } => dim,
        GeometryMode::Plane => 2,
    }
}

fn wave_for(c: f64, cfg: &Config) -> Result<WaveProfile> {
    if c >= crate::MINIMAL_SPEED {
        solve_wave(c, cfg.wave.dz, cfg.wave.z_span)
    } else {
        solve_sign_changing_wave(c, cfg.wave.dz, cfg.wave.z_span)
    }
}

// ---------------------------------------------------------------- waves

pub fn run_wave_study(cfg: &Config) -> Result<StudyOutput> {
    if cfg.wave.speeds.is_empty() {
        return Err(Error::Usage("wave study needs at least one speed".into()));
    }
    let cols = [
        "c",
        "z_min",
        "z_max",
        "table_len",
        "max_residual",
        "lambda_fit",
        "decay_rate",
        "rate_rel_error",
        "gamma_minus",
        "gamma_plus",
        "mu_left",
        "c_left",
    ];
    let mut report = ExperimentReport::new("wave", &cols, cfg.hash());
    let solved: Vec<(f64, Result<(WaveProfile, f64)>)> = cfg
        .wave
        .speeds
        .par_iter()
        .map(|&c| {
            let start = Instant::now();
            (c, wave_for(c, cfg).map(|w| (w, start.elapsed().as_secs_f64())))
        })
        .collect();
    let mut out_files = Vec::new();
    let mut plots = Vec::new();
    let mut residual_ok = true;
    let mut rate_ok = true;
    let mut kpp = None;
    let mut details = Vec::new();
    for (c, res) in solved {
        let (w, secs) = res?;
        report.metadata.runtimes.push((format!("c={c}"), secs));
        let rate = if c >= crate::MINIMAL_SPEED { Some(decay_rate(c)?) } else { None };
        let fit = w.lambda_right();
        let rel = match (fit, rate) {
            (Some(f), Some(r)) if c > crate::MINIMAL_SPEED => Some((f - r).abs() / r),
            _ => None,
        };
        let gam = if c == crate::MINIMAL_SPEED { Some(w.kpp_ratio_bounds()?) } else { None };
        let res = w.max_residual();
        residual_ok &= res <= 1e-8;
        if let Some(r) = rel {
            rate_ok &= r <= 0.01;
        }
        if let Some(g) = gam {
            kpp = Some(g);
        }
        details.push(format!("c={c}: residual {res:.3e}"));
        let tl = w.tail_left();
        report.push_row(vec![
            c.into(),
            w.z_min().into(),
            w.z_max().into(),
            w.len().into(),
            res.into(),
            fit.into(),
            rate.into(),
            rel.into(),
            gam.map(|g| g.0).into(),
            gam.map(|g| g.1).into(),
            tl.mu.into(),
            tl.c_bound.into(),
        ]);
        let mut buf = Vec::new();
        w.write_csv(&mut buf)?;
        out_files.push((format!("wave_c{c}.csv"), String::from_utf8(buf).expect("ascii csv")));
        let stride = (w.len() / 800).max(1);
        plots.push(Series {
            label: format!("c={c}"),
            points: w.table().step_by(stride).map(|(z, u, _)| (z, u)).collect(),
        });
    }
    report.checks.push(Check::new("ode_residual", residual_ok, details.join("; ")));
    report.checks.push(Check::new("tail_rate_within_1pct", rate_ok, "fitted right-tail rate vs smallest root of l^2 - c l + 1"));
    if let Some((gm, gp)) = kpp {
        report.checks.push(Check::new(
            "kpp_ratio",
            gm > 0.0 && gm <= gp && gp / gm <= 10.0,
            format!("gamma- = {gm:.6e}, gamma+ = {gp:.6e}, ratio {:.4}", gp / gm),
        ));
    }
    let mut out = StudyOutput::new(report);
    out.files = out_files;
    out.plots.push(("waves.svg".into(), line_plot("Travelling waves", "z", "U", &plots, Axes::default())));
    Ok(out)
}

// ---------------------------------------------------------------- simulate

pub fn run_simulation(cfg: &Config) -> Result<StudyOutput> {
    let eps = cfg.epsilons(1)?;
    let t_end = cfg.solver.t_end;
    let mut cps: Vec<f64> = cfg.solver.checkpoints.clone();
    cps.push(t_end);
    cps.sort_by(f64::total_cmp);
    cps.dedup();
    let runs: Vec<Result<(f64, Trajectory, f64)>> = eps
        .par_iter()
        .map(|&e| {
            let sim = cfg.sim_config(e, cps.clone())?;
            let start = Instant::now();
            let traj = run(&sim)?;
            Ok((e, traj, start.elapsed().as_secs_f64()))
        })
        .collect();
    let cols = ["epsilon", "t", "sup", "mass", "front", "thickness", "steps"];
    let mut report = ExperimentReport::new("simulate", &cols, cfg.hash());
    let mut out_files = Vec::new();
    let mut plot = Vec::new();
    for r in runs {
        let (e, traj, secs) = r?;
        report.metadata.runtimes.push((eps_label(e), secs));
        for (k, (t, f)) in traj.checkpoints.iter().enumerate() {
            report.push_row(vec![
                e.into(),
                (*t).into(),
                f.max().into(),
                f.mass().into(),
                Observable::Front.measure(f, e).into(),
                layer_thickness(f, e).into(),
                traj.steps.into(),
            ]);
            let mut buf = Vec::new();
            write_checkpoint(&mut buf, *t, f)?;
            out_files.push((format!("eps_{e}/checkpoint_{k}.csv"), String::from_utf8(buf).expect("ascii csv")));
        }
        let mut series = String::from("t");
        let names: Vec<&str> = traj.series.keys().copied().collect();
        for n in &names {
            series.push(',');
            series.push_str(n);
        }
        series.push('\n');
        let len = traj.series.values().next().map_or(0, |v| v.len());
        for i in 0..len {
            let t = traj.series[names[0]][i].0;
            series.push_str(&format!("{t:.16e}"));
            for n in &names {
                series.push(',');
                if let Some(v) = traj.series[n][i].1 {
                    series.push_str(&format!("{v:.16e}"));
                }
            }
            series.push('\n');
        }
        out_files.push((format!("eps_{e}/series.csv"), series));
        if let Some(f) = traj.final_field() {
            let g = f.grid();
            let pts = if g.mode() == GeometryMode::Plane {
                (0..g.nx()).map(|i| (g.x_coord(i), f.values()[g.index(i, 0)])).collect()
            } else {
                (0..g.nx()).map(|i| (g.x_coord(i), f.values()[i])).collect()
            };
            plot.push(Series { label: eps_label(e), points: pts });
        }
    }
    report.checks.push(Check::new("completed", true, "all runs finite and within the a priori bound"));
    let mut out = StudyOutput::new(report);
    out.files = out_files;
    out.plots.push(("final.svg".into(), line_plot("Solution at t_end", "x", "u", &plot, Axes::default())));
    Ok(out)
}

// ---------------------------------------------------------------- speed and thickness

struct FrontRun {
    epsilon: f64,
    traj: Trajectory,
    secs: f64,
}

fn front_runs(cfg: &Config) -> Result<Vec<FrontRun>> {
    let eps = cfg.epsilons(2)?;
    if cfg.initial.kind == InitialKind::Algebraic {
        return Err(Error::Config("speed and thickness studies need compact or wave initial data".into()));
    }
    let t_end = cfg.solver.t_end;
    eps.par_iter()
        .map(|&e| {
            let mut sim = cfg.sim_config(e, vec![0.5 * t_end, t_end])?;
            sim.record = vec![Observable::Front, Observable::Thickness];
            let start = Instant::now();
            let traj = run(&sim)?;
            Ok(FrontRun { epsilon: e, traj, secs: start.elapsed().as_secs_f64() })
        })
        .collect()
}

fn speed_report(cfg: &Config, runs: &[FrontRun]) -> Result<StudyOutput> {
    let t_end = cfg.solver.t_end;
    let t0 = cfg.study.fit_window * t_end;
    let cols = ["epsilon", "eps_log", "speed", "speed_error", "speed_bound", "fit_rms", "window_points", "steps"];
    let mut report = ExperimentReport::new("speed", &cols, cfg.hash());
    let mut plot = Vec::new();
    let mut errors = Vec::new();
    let mut within = true;
    let mut detail = Vec::new();
    for r in runs {
        let series = r.traj.series(Observable::Front).expect("front recorded");
        let mut ts = Vec::new();
        let mut xs = Vec::new();
        for &(t, x) in series.iter().filter(|(t, _)| *t >= t0 * (1.0 - 1e-12)) {
            let x = x.ok_or_else(|| Error::Data(format!("front missing at t={t:.6} (eps = {})", r.epsilon)))?;
            ts.push(t);
            xs.push(x);
        }
        let (a, b, rms) = linear_fit(&ts, &xs)?;
        let err = (b - crate::MINIMAL_SPEED).abs();
        let bound = 10.0 * eps_log(r.epsilon);
        within &= err <= bound;
        errors.push(err);
        detail.push(format!("eps={}: |c-2| = {err:.4e} <= {bound:.4e}", r.epsilon));
        report.push_row(vec![
            r.epsilon.into(),
            eps_log(r.epsilon).into(),
            b.into(),
            err.into(),
            bound.into(),
            rms.into(),
            ts.len().into(),
            r.traj.steps.into(),
        ]);
        report.fits.push(Fit {
            model: format!("front = a + c t ({})", eps_label(r.epsilon)),
            params: vec![("a".into(), a), ("c".into(), b)],
            residual: rms,
        });
        report.metadata.runtimes.push((eps_label(r.epsilon), r.secs));
        let stride = (series.len() / 400).max(1);
        plot.push(Series {
            label: eps_label(r.epsilon),
            points: series.iter().step_by(stride).filter_map(|(t, x)| Some((*t, (*x)?))).collect(),
        });
    }
    report.checks.push(Check::new("speed_within_bound", within, detail.join("; ")));
    let decreasing = errors.windows(2).all(|w| w[1] < w[0]);
    report.checks.push(Check::new(
        "speed_error_decreasing",
        decreasing,
        format!("errors down the ladder: {:?}", errors.iter().map(|e| format!("{e:.4e}")).collect::<Vec<_>>()),
    ));
    report.sort_decreasing("epsilon");
    let mut out = StudyOutput::new(report);
    out.plots.push(("front.svg".into(), line_plot("Front position", "t", "x(u=1/2)", &plot, Axes::default())));
    Ok(out)
}

fn thickness_report(cfg: &Config, runs: &[FrontRun]) -> Result<StudyOutput> {
    let t_end = cfg.solver.t_end;
    let cols = ["epsilon", "t", "eps_log", "thickness", "thickness_ratio", "c_meas"];
    let mut report = ExperimentReport::new("thickness", &cols, cfg.hash());
    let body = match cfg.initial.kind {
        InitialKind::Compact => Some(cfg.body()?),
        _ => None,
    };
    let mut ratios_end = Vec::new();
    let mut c_end = Vec::new();
    let mut el_end = Vec::new();
    let mut w_end = Vec::new();
    let mut positive = true;
    let mut plot = Vec::new();
    for r in runs {
        let el = eps_log(r.epsilon);
        for (t, f) in &r.traj.checkpoints {
            let w = layer_thickness(f, r.epsilon)
                .ok_or_else(|| Error::Data(format!("no layer at checkpoint t={t} (eps = {})", r.epsilon)))?;
            positive &= w > 0.0;
            let c_meas = match &body {
                Some(b) => Some(measured_tube_constant(f, *t, b, r.epsilon)?),
                None => None,
            };
            if (*t - t_end).abs() <= 1e-12 * t_end {
                ratios_end.push(w / el);
                el_end.push(el);
                w_end.push(w);
                if let Some(c) = c_meas {
                    c_end.push(c);
                }
            }
            report.push_row(vec![r.epsilon.into(), (*t).into(), el.into(), w.into(), (w / el).into(), c_meas.into()]);
        }
        report.metadata.runtimes.push((eps_label(r.epsilon), r.secs));
    }
    let (a, rms) = proportional_fit(&el_end, &w_end)?;
    report.fits.push(Fit { model: "W(T) = A eps|ln eps|".into(), params: vec![("A".into(), a)], residual: rms });
    plot.push(Series { label: "W(T)".into(), points: el_end.iter().copied().zip(w_end.iter().copied()).collect() });
    plot.push(Series { label: "fit".into(), points: el_end.iter().map(|e| (*e, a * e)).collect() });
    let rs = spread(&ratios_end);
    report.checks.push(Check::new("thickness_ratio_spread", rs <= 2.0, format!("max/min of W/(eps|ln eps|) = {rs:.4}")));
    if body.is_some() {
        let cs = spread(&c_end);
        report.checks.push(Check::new(
            "tube_constant_spread",
            cs.is_finite() && cs <= 2.0,
            format!("C_meas at T: {:?}, max/min = {cs:.4}", c_end.iter().map(|c| format!("{c:.4}")).collect::<Vec<_>>()),
        ));
    }
    report.checks.push(Check::new("thickness_positive", positive, "W > 0 at every checkpoint"));
    report.sort_decreasing("epsilon");
    let mut out = StudyOutput::new(report);
    out.plots.push((
        "thickness.svg".into(),
        line_plot("Layer thickness at T", "eps|ln eps|", "W", &plot, Axes { log_x: true, log_y: true }),
    ));
    Ok(out)
}

pub fn run_speed_study(cfg: &Config) -> Result<StudyOutput> {
    speed_report(cfg, &front_runs(cfg)?)
}

pub fn run_thickness_study(cfg: &Config) -> Result<StudyOutput> {
    thickness_report(cfg, &front_runs(cfg)?)
}

/// Speed and thickness from one set of runs.
pub fn run_front_studies(cfg: &Config) -> Result<(StudyOutput, StudyOutput)> {
    let runs = front_runs(cfg)?;
    Ok((speed_report(cfg, &runs)?, thickness_report(cfg, &runs)?))
}

// ---------------------------------------------------------------- generation

/// First time the minimum of `u` over `{g ≥ kε|ln ε|}` exceeds `1 − ε`,
/// linearly interpolated between steps.
fn generation_time(sim: &SimConfig, k: f64) -> Result<(f64, usize)> {
    let eps = sim.epsilon;
    let thr_g = k * eps_log(eps);
    let grid = sim.grid;
    let mut set = Vec::new();
    for idx in 0..grid.len() {
        if sim.initial.g(grid.point(idx).as_slice())? >= thr_g {
            set.push(idx);
        }
    }
    if set.is_empty() {
        return Err(Error::Config(format!("no node has g >= {thr_g:.4e}")));
    }
    let level = 1.0 - eps;
    let mut prev: Option<(f64, f64)> = None;
    let mut tau = None;
    let traj = run_with_observer(sim, |t, f| {
        let v = f.values();
        let m = set.iter().map(|&i| v[i]).fold(f64::INFINITY, f64::min);
        if m > level {
            tau = Some(match prev {
                None => t,
                Some((t0, m0)) => t0 + (level - m0) / (m - m0) * (t - t0),
            });
            return ControlFlow::Break(());
        }
        prev = Some((t, m));
        ControlFlow::Continue(())
    })?;
    let tau = tau.ok_or_else(|| {
        Error::Data(format!("min u over the generation set never exceeded 1-eps before t_end (eps = {eps})"))
    })?;
    Ok((tau, traj.steps))
}

pub fn run_generation_study(cfg: &Config) -> Result<StudyOutput> {
    let eps = cfg.epsilons(2)?;
    if cfg.initial.kind != InitialKind::Compact {
        return Err(Error::Config("generation study needs compact initial data".into()));
    }
    let k = cfg.study.generation_k;
    let runs: Vec<Result<(f64, f64, usize, f64, f64)>> = eps
        .par_iter()
        .map(|&e| {
            let mut sim = cfg.sim_config(e, Vec::new())?;
            sim.record = Vec::new();
            let start = Instant::now();
            let (tau, steps) = generation_time(&sim, k)?;
            let secs = start.elapsed().as_secs_f64();
            let kin = cfg.kinetics(e)?;
            let ga = kin.generation_alpha(sim.initial.g_sup() + sim.initial.tail_m() + 1.0)?;
            Ok((e, tau, steps, ga.s_lower / kin.ln_abs(), secs))
        })
        .collect();
    let cols = ["epsilon", "eps_log", "tau", "alpha_eps", "semiflow_alpha", "steps"];
    let mut report = ExperimentReport::new("generation", &cols, cfg.hash());
    let mut els = Vec::new();
    let mut taus = Vec::new();
    let mut alphas = Vec::new();
    for r in runs {
        let (e, tau, steps, sa, secs) = r?;
        let el = eps_log(e);
        els.push(el);
        taus.push(tau);
        alphas.push(tau / el);
        report.metadata.runtimes.push((eps_label(e), secs));
        report.push_row(vec![e.into(), el.into(), tau.into(), (tau / el).into(), sa.into(), steps.into()]);
    }
    let (alpha, rms) = proportional_fit(&els, &taus)?;
    report.fits.push(Fit { model: "tau = alpha eps|ln eps|".into(), params: vec![("alpha".into(), alpha)], residual: rms });
    let s = spread(&alphas);
    report.checks.push(Check::new(
        "alpha_stable",
        s <= 2.0,
        format!("tau/(eps|ln eps|) = {:?}, max/min = {s:.4}", alphas.iter().map(|a| format!("{a:.4}")).collect::<Vec<_>>()),
    ));
    let mean = taus.iter().sum::<f64>() / taus.len() as f64;
    report.checks.push(Check::new(
        "fit_residual",
        rms <= 0.2 * mean,
        format!("rms residual {rms:.4e} vs 20% of mean tau {:.4e}", 0.2 * mean),
    ));
    report.checks.push(Check::new(
        "tau_decreasing",
        taus.windows(2).all(|w| w[1] <= w[0]),
        format!("tau down the ladder: {:?}", taus.iter().map(|t| format!("{t:.4e}")).collect::<Vec<_>>()),
    ));
    let plot = vec![
        Series { label: "tau".into(), points: els.iter().copied().zip(taus.iter().copied()).collect() },
        Series { label: "fit".into(), points: els.iter().map(|e| (*e, alpha * e)).collect() },
    ];
    report.sort_decreasing("epsilon");
    let mut out = StudyOutput::new(report);
    out.plots.push((
        "generation.svg".into(),
        line_plot("Generation time", "eps|ln eps|", "tau", &plot, Axes { log_x: true, log_y: true }),
    ));
    Ok(out)
}

// ---------------------------------------------------------------- no interface

pub fn run_no_interface_study(cfg: &Config) -> Result<StudyOutput> {
    let eps = cfg.epsilons(2)?;
    if cfg.geometry.mode != ModeName::Radial {
        return Err(Error::Config("the no-interface study runs in radial mode".into()));
    }
    if cfg.initial.kind != InitialKind::Algebraic {
        return Err(Error::Config("the no-interface study needs algebraic initial data".into()));
    }
    let [t0, r0] = cfg.study.probe;
    if !(t0 > 0.0) {
        return Err(Error::Config(format!("probe time must be positive, got {t0}")));
    }
    if !(r0 >= 0.0 && r0 <= cfg.geometry.r_max) {
        return Err(Error::Config(format!("probe radius {r0} outside the grid [0, {}]", cfg.geometry.r_max)));
    }
    let algebraic = cfg.initial_data()?;
    let st = &cfg.study;
    let control = InitialData::Compact {
        body: ConvexBody::ball([0.0, 0.0], st.control_radius)?,
        amplitude: st.control_amplitude,
        width: st.control_width,
        tail: None,
    };
    let jobs: Vec<(f64, bool)> = eps.iter().flat_map(|&e| [(e, true), (e, false)]).collect();
    let results = jobs
        .par_iter()
        .map(|&(e, alg)| {
            let grid = cfg.grid(e)?;
            let mut sim = SimConfig::new(e, grid, if alg { algebraic.clone() } else { control.clone() }, t0);
            sim.dt = cfg.solver.dt.unwrap_or(sim.dt);
            sim.record = Vec::new();
            let start = Instant::now();
            let traj = run(&sim)?;
            let f = traj.final_field().expect("t_end checkpoint");
            let probe = f.interpolate(&[r0])?;
            let center = f.interpolate(&[0.0])?;
            Ok((e, probe, center, start.elapsed().as_secs_f64()))
        })
        .collect::<Result<Vec<_>>>()?;
    let cols = ["epsilon", "probe_algebraic", "probe_control", "center_algebraic", "center_control", "xi_eps"];
    let mut report = ExperimentReport::new("no-interface", &cols, cfg.hash());
    let mut alg_probe = Vec::new();
    let mut ctl_probe = Vec::new();
    let mut centers_ok = true;
    let mut center_detail = Vec::new();
    let mut rows = Vec::new();
    for pair in results.chunks(2) {
        let ((e, pa, ca, sa), (_, pc, cc, sc)) = (pair[0], pair[1]);
        report.metadata.runtimes.push((format!("{} algebraic", eps_label(e)), sa));
        report.metadata.runtimes.push((format!("{} control", eps_label(e)), sc));
        alg_probe.push(pa);
        ctl_probe.push(pc);
        let floor = 1.0 - 2.0 * e;
        centers_ok &= ca >= floor && cc >= floor;
        center_detail.push(format!("eps={e}: {ca:.6}, {cc:.6} >= {floor}"));
        let xi = match algebraic {
            InitialData::Algebraic { m, n, .. } => xi_eps(e, st.generation_k, m, n).ok(),
            _ => None,
        };
        rows.push(vec![e.into(), pa.into(), pc.into(), ca.into(), cc.into(), xi.into()]);
    }
    for r in rows {
        report.push_row(r);
    }
    let inc = alg_probe.windows(2).all(|w| w[1] > w[0]);
    let last = *alg_probe.last().unwrap();
    report.checks.push(Check::new(
        "algebraic_probe_increasing",
        inc && last >= 0.9,
        format!("u(t0, x0) down the ladder: {:?}", alg_probe.iter().map(|v| format!("{v:.8}")).collect::<Vec<_>>()),
    ));
    let ctl_max = ctl_probe.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    report.checks.push(Check::new(
        "control_probe_small",
        ctl_max <= 0.05,
        format!("max control probe {ctl_max:.4e} <= 0.05"),
    ));
    report.checks.push(Check::new("center_above_band", centers_ok, center_detail.join("; ")));
    let els: Vec<f64> = eps.iter().copied().collect();
    let plot = vec![
        Series { label: "algebraic".into(), points: els.iter().copied().zip(alg_probe.iter().copied()).collect() },
        Series { label: "compact".into(), points: els.iter().copied().zip(ctl_probe.iter().copied()).collect() },
    ];
    report.sort_decreasing("epsilon");
    let mut out = StudyOutput::new(report);
    out.plots.push(("probe.svg".into(), line_plot("Probe u(t0, x0)", "eps", "u", &plot, Axes { log_x: true, log_y: false })));
    Ok(out)
}

// ---------------------------------------------------------------- barriers

/// Worst node of an ordering or residual scan.
#[derive(Clone, Copy, Debug)]
struct Worst {
    value: f64,
    t: f64,
    x: [f64; 2],
    u: f64,
    barrier: f64,
}

impl Worst {
    fn none(value: f64) -> Worst {
        Worst { value, t: f64::NAN, x: [f64::NAN; 2], u: f64::NAN, barrier: f64::NAN }
    }

    fn describe(&self) -> String {
        if self.t.is_nan() {
            return format!("worst {:.4e}, no offending node", self.value);
        }
        format!("worst {:.4e} at t={:.6}, x=({:.6}, {:.6}), u={:.6e}, barrier={:.6e}", self.value, self.t, self.x[0], self.x[1], self.u, self.barrier)
    }
}

fn point2(p: &[f64]) -> [f64; 2] {
    [p[0], p.get(1).copied().unwrap_or(0.0)]
}

/// `min (u − v)` over the nodes (`below = true`) or `min (v − u)`.
fn ordering<F>(field: &Field, t: f64, below: bool, v: F) -> Result<Worst>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let grid = field.grid();
    let vals = field.values();
    let per: Vec<Result<Worst>> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let p = grid.point(idx);
            let b = v(p.as_slice())?;
            let u = vals[idx];
            let s = if below { u - b } else { b - u };
            Ok(Worst { value: s, t, x: point2(p.as_slice()), u, barrier: b })
        })
        .collect();
    let mut worst = Worst::none(f64::INFINITY);
    for w in per {
        let w = w?;
        if w.value < worst.value {
            worst = w;
        }
    }
    Ok(worst)
}

/// Largest `sign · ℒᵉ[v]` over nodes not excluded by `skip` (zero if none).
fn residual_violation<V, S>(v: V, t: f64, dt: f64, grid: &Grid, eps: f64, sign: f64, skip: S) -> Result<Worst>
where
    V: Fn(f64, &[f64]) -> f64 + Sync,
    S: Fn(&[f64]) -> bool,
{
    let res = discrete_residual(&v, t, dt, grid, eps)?;
    if !res.is_finite() {
        return Err(Error::Numerical(format!("non-finite barrier residual at t={t}")));
    }
    let mut worst = Worst::none(0.0);
    for (idx, r) in res.values().iter().enumerate() {
        let p = grid.point(idx);
        if skip(p.as_slice()) {
            continue;
        }
        let s = sign * r;
        if s > worst.value {
            worst = Worst { value: s, t, x: point2(p.as_slice()), u: f64::NAN, barrier: v(t, p.as_slice()) };
        }
    }
    Ok(worst)
}

fn residual_grid(cfg: &Config, grid: &Grid, eps: f64) -> Result<Grid> {
    let dx = eps / (cfg.geometry.cells_per_eps * cfg.study.residual_refine);
    let ax = grid.x_axis();
    match grid.mode() {
        GeometryMode::Line => Grid::line(ax.lo, ax.hi, dx),
        GeometryMode::Radial { dim } => Grid::radial(dim, ax.hi, dx),
        GeometryMode::Plane => {
            let ay = grid.y_axis().expect("plane grid");
            Grid::plane((ax.lo, ax.hi), (ay.lo, ay.hi), dx)
        }
    }
}

fn fold_worst(acc: Option<Worst>, w: Worst, smaller: bool) -> Option<Worst> {
    match acc {
        None => Some(w),
        Some(a) if (smaller && w.value < a.value) || (!smaller && w.value > a.value) => Some(w),
        keep => keep,
    }
}

struct BarrierRows {
    rows: Vec<Vec<Cell>>,
    checks: Vec<Check>,
    fits: Vec<Fit>,
    runtimes: Vec<(String, f64)>,
}

fn compact_sandwich(cfg: &Config, eps: f64) -> Result<BarrierRows> {
    let st = &cfg.study;
    let start = Instant::now();
    let kin = cfg.kinetics(eps)?;
    let initial = cfg.initial_data()?;
    let body = match &initial {
        InitialData::Compact { body, .. } => *body,
        _ => return Err(Error::Config("the barrier sandwich needs compact initial data".into())),
    };
    let t_end = cfg.solver.t_end;
    let el = eps_log(eps);
    let ga = kin.generation_alpha(initial.g_sup() + initial.tail_m() + 1.0)?;
    let t_gen = ga.alpha * el;
    if !(t_gen < t_end) {
        return Err(Error::Config(format!("t_end = {t_end} does not exceed the generation time {t_gen:.4e}")));
    }
    let grid = cfg.grid(eps)?;
    let dim = dimension(&grid);
    let k_drift = generation_drift(&kin, &initial, dim, ga.alpha)?;
    let wave2 = solve_wave(crate::MINIMAL_SPEED, cfg.wave.dz, cfg.wave.z_span)?;
    let c_eps = motion_speed(eps);
    let wave_c = solve_sign_changing_wave(c_eps, cfg.wave.dz, cfg.wave.z_span)?;
    let k0 = k0_lower_bound(&wave2, &initial)?;
    let k_hat = st.k_hat.unwrap_or(k0);

    let ng = st.generation_samples.max(1);
    let nm = st.motion_samples.max(1);
    let mut times: Vec<f64> = (0..=ng).map(|k| t_gen * k as f64 / ng as f64).collect();
    times.extend((1..=nm).map(|k| t_gen + (t_end - t_gen) * k as f64 / nm as f64));
    times.dedup();
    let mut sim = cfg.sim_config(eps, times)?;
    sim.record = Vec::new();
    let traj = run(&sim)?;
    let solve_secs = start.elapsed().as_secs_f64();

    let at_gen = &traj.checkpoints.iter().find(|(t, _)| *t == t_gen).expect("generation checkpoint").1;
    let m1 = fit_m1(at_gen, &wave_c, body, eps, st.m2)?;
    let sub = MotionSub::new(&wave_c, body, eps, m1, st.m2)?;
    let mu = wave_c.tail_left().mu;
    let n_meas = CutoffDistance::new(body, c_eps)?.measured_mvt_constant();
    let floor = tube_constant_floor(t_end - t_gen, m1, st.m2, mu);

    let slack = st.slack_floor.max(st.slack_cells * grid.dx());
    let rgrid = residual_grid(cfg, &grid, eps)?;
    let kink = 2.0 * rgrid.dx();
    let dt_res = 1e-3 * eps;

    let mut rows = Vec::new();
    let (mut w_gen, mut w_mot, mut w_sup, mut w_rsup, mut w_rsub, mut w_sab) = (None, None, None, None, None, None);
    let mut w_rsub_id = None;
    let d0 = sub.distance.d0;
    for (t, f) in &traj.checkpoints {
        let t = *t;
        let mut slack_sub = f64::INFINITY;
        if t <= t_gen {
            let w = ordering(f, t, true, |x| generation_sub(t, x, k_drift, &kin, &initial))?;
            slack_sub = slack_sub.min(w.value);
            w_gen = fold_worst(w_gen, w, true);
        }
        if t >= t_gen {
            let s = t - t_gen;
            let w = ordering(f, t, true, |x| sub.evaluate(s, x))?;
            slack_sub = slack_sub.min(w.value);
            w_mot = fold_worst(w_mot, w, true);
        }
        let gs = generation_super(t, &initial, eps);
        let wg = ordering(f, t, false, |x| global_super(t, x, k_hat, &wave2, &body, eps))?;
        let wl = ordering(f, t, false, |_| Ok(gs))?;
        let wsup = if wl.value < wg.value { wl } else { wg };
        w_sup = fold_worst(w_sup, wsup, true);
        let sab = ordering(f, t, false, |x| global_super(t, x, 0.5, &wave2, &body, eps))?;
        w_sab = fold_worst(w_sab, sab, true);

        let rsup = if t >= dt_res {
            let v = |tt: f64, x: &[f64]| global_super(tt, x, k_hat, &wave2, &body, eps).unwrap_or(f64::NAN);
            let w = residual_violation(v, t, dt_res, &rgrid, eps, -1.0, |_| false)?;
            w_rsup = fold_worst(w_rsup, w, false);
            Some(w.value.max(0.0))
        } else {
            None
        };
        let rsub = if t - t_gen >= dt_res {
            let s = t - t_gen;
            let v = |tt: f64, x: &[f64]| sub.evaluate(tt, x).unwrap_or(f64::NAN);
            let skip = |x: &[f64]| sub.theta(s, x).map_or(true, |th| (th * eps).abs() <= kink);
            let w = residual_violation(v, s, dt_res, &rgrid, eps, 1.0, skip)?;
            w_rsub = fold_worst(w_rsub, w, false);
            let clamped = |x: &[f64]| sub.distance.evolved_distance(s, x).map_or(true, |d| d.abs() >= d0);
            let wi = residual_violation(v, s, dt_res, &rgrid, eps, 1.0, |x| skip(x) || clamped(x))?;
            w_rsub_id = fold_worst(w_rsub_id, wi, false);
            Some(w.value.max(0.0))
        } else {
            None
        };
        rows.push(vec![
            "compact".into(),
            eps.into(),
            t.into(),
            slack_sub.into(),
            wsup.value.into(),
            rsup.into(),
            rsub.into(),
        ]);
    }
    let tol = st.residual_tol;
    let mut checks = Vec::new();
    let verdict = |name: &str, w: Option<Worst>, ok: fn(f64, f64) -> bool, lim: f64| {
        let w = w.unwrap_or(Worst::none(f64::NAN));
        Check::new(name, ok(w.value, lim), format!("eps={eps}: {} (limit {lim:.3e})", w.describe()))
    };
    let ge = |v: f64, lim: f64| v >= -lim;
    let le = |v: f64, lim: f64| v <= lim;
    checks.push(verdict("generation_sub_ordering", w_gen, ge, slack));
    checks.push(verdict("motion_sub_ordering", w_mot, ge, slack));
    checks.push(verdict("super_ordering", w_sup, ge, slack));
    checks.push(verdict("super_residual", w_rsup, le, tol));
    checks.push(verdict("motion_sub_residual", w_rsub, le, tol));
    checks.push(verdict("motion_sub_residual_unclamped", w_rsub_id, le, tol));
    let sab = w_sab.unwrap_or(Worst::none(f64::NAN));
    checks.push(Check::new(
        "sabotage_detected",
        sab.value < -slack,
        format!("eps={eps}: K_hat = 0.5 gives {} (must fall below -{slack:.3e})", sab.describe()),
    ));
    let fits = vec![Fit {
        model: format!("barrier constants ({})", eps_label(eps)),
        params: vec![
            ("alpha".into(), ga.alpha),
            ("t_gen".into(), t_gen),
            ("K".into(), k_drift),
            ("K0".into(), k0),
            ("K_hat".into(), k_hat),
            ("c_eps".into(), c_eps),
            ("m1".into(), m1),
            ("m2".into(), st.m2),
            ("m2_recipe".into(), if m1 > 0.0 { m2_recipe(n_meas, m1, mu) } else { f64::INFINITY }),
            ("N_meas".into(), n_meas),
            ("tube_floor".into(), floor),
            ("slack".into(), slack),
        ],
        residual: 0.0,
    }];
    Ok(BarrierRows {
        rows,
        checks,
        fits,
        runtimes: vec![(format!("{} compact", eps_label(eps)), start.elapsed().as_secs_f64()), (format!("{} compact solve", eps_label(eps)), solve_secs)],
    })
}

fn radial_sandwich(cfg: &Config, eps: f64) -> Result<BarrierRows> {
    let st = &cfg.study;
    let start = Instant::now();
    let dim = if cfg.geometry.mode == ModeName::Radial { cfg.geometry.dim } else { 2 };
    let (m, n) = (cfg.initial.m, cfg.initial.n);
    let initial = InitialData::Algebraic { m, n, cap: cfg.initial.cap.unwrap_or(m) };
    initial.validate()?;
    let wave = solve_wave(st.w_speed, cfg.wave.dz, cfg.wave.z_span)?;
    let rho = RadialSub::minimal_rho(&wave, st.w_c1, dim, m, n)?;
    let w = RadialSub::new(&wave, st.w_c1, rho, eps, dim, Plateau::Symmetric, m, n)?;
    let dx = eps / cfg.geometry.cells_per_eps;
    let grid = Grid::radial(dim, st.w_r_max, dx)?;
    let t_end = cfg.solver.t_end;
    let nm = st.motion_samples.max(1);
    let times: Vec<f64> = (0..=nm).map(|k| t_end * k as f64 / nm as f64).collect();
    let mut sim = SimConfig::new(eps, grid, initial, t_end);
    sim.checkpoint_times = times;
    sim.record = Vec::new();
    let traj = run(&sim)?;
    let rgrid = residual_grid(cfg, &grid, eps)?;
    let kink = 2.0 * rgrid.dx();
    let dt_res = 1e-3 * eps;
    let slack = st.slack_floor.max(st.slack_cells * dx);
    let (mut w_ord, mut w_res) = (None, None);
    let mut rows = Vec::new();
    for (t, f) in &traj.checkpoints {
        let t = *t;
        let wo = ordering(f, t, true, |x| Ok(w.evaluate(t, x)))?;
        w_ord = fold_worst(w_ord, wo, true);
        let rs = if t >= dt_res {
            let r = residual_violation(|tt, x| w.evaluate(tt, x), t, dt_res, &rgrid, eps, 1.0, |x| w.near_kink(t, x, kink))?;
            w_res = fold_worst(w_res, r, false);
            Some(r.value.max(0.0))
        } else {
            None
        };
        rows.push(vec!["radial".into(), eps.into(), t.into(), wo.value.into(), Cell::Missing, Cell::Missing, rs.into()]);
    }
    let wo = w_ord.unwrap_or(Worst::none(f64::NAN));
    let wr = w_res.unwrap_or(Worst::none(f64::NAN));
    let checks = vec![
        Check::new("radial_sub_ordering", wo.value >= -slack, format!("eps={eps}: {} (limit {slack:.3e})", wo.describe())),
        Check::new(
            "radial_sub_residual",
            wr.value <= st.residual_tol,
            format!("eps={eps}: {} (limit {:.3e})", wr.describe(), st.residual_tol),
        ),
    ];
    let fits = vec![Fit {
        model: format!("radial sub-solution ({})", eps_label(eps)),
        params: vec![("c".into(), st.w_speed), ("c1".into(), st.w_c1), ("rho".into(), rho), ("dim".into(), dim as f64)],
        residual: 0.0,
    }];
    Ok(BarrierRows { rows, checks, fits, runtimes: vec![(format!("{} radial", eps_label(eps)), start.elapsed().as_secs_f64())] })
}

pub fn run_barrier_check(cfg: &Config) -> Result<StudyOutput> {
    let eps = cfg.epsilons(1)?;
    let jobs: Vec<(f64, bool)> = eps.iter().flat_map(|&e| [(e, true), (e, false)]).collect();
    let parts: Vec<Result<BarrierRows>> = jobs
        .par_iter()
        .map(|&(e, compact)| if compact { compact_sandwich(cfg, e) } else { radial_sandwich(cfg, e) })
        .collect();
    let cols = [
        "check",
        "epsilon",
        "t",
        "min_slack_sub",
        "min_slack_super",
        "max_residual_super_violation",
        "max_residual_sub_violation",
    ];
    let mut report = ExperimentReport::new("barriers", &cols, cfg.hash());
    let mut plot_sub = Vec::new();
    let mut plot_sup = Vec::new();
    for p in parts {
        let p = p?;
        let label = match &p.rows.first().map(|r| r[0].clone()) {
            Some(Cell::Text(s)) => format!("{s} {}", p.rows[0][1].as_f64().map(eps_label).unwrap_or_default()),
            _ => String::new(),
        };
        plot_sub.push(Series { label: label.clone(), points: p.rows.iter().map(|r| (r[2].as_f64().unwrap(), r[3].as_f64().unwrap_or(f64::NAN))).collect() });
        if p.rows.iter().any(|r| r[4].as_f64().is_some()) {
            plot_sup.push(Series { label, points: p.rows.iter().filter_map(|r| Some((r[2].as_f64()?, r[4].as_f64()?))).collect() });
        }
        for r in p.rows {
            report.push_row(r);
        }
        report.checks.extend(p.checks);
        report.fits.extend(p.fits);
        report.metadata.runtimes.extend(p.runtimes);
    }
    report.sort_decreasing("epsilon");
    let mut out = StudyOutput::new(report);
    out.plots.push(("slack_sub.svg".into(), line_plot("u - sub-solution (min over nodes)", "t", "slack", &plot_sub, Axes::default())));
    out.plots.push(("slack_super.svg".into(), line_plot("super-solution - u (min over nodes)", "t", "slack", &plot_sup, Axes::default())));
    Ok(out)
}

/// Runs the named study.
pub fn run_study(name: &str, cfg: &Config) -> Result<StudyOutput> {
    match name {
        "wave" => run_wave_study(cfg),
        "simulate" => run_simulation(cfg),
        "speed" => run_speed_study(cfg),
        "thickness" => run_thickness_study(cfg),
        "generation" => run_generation_study(cfg),
        "no-interface" => run_no_interface_study(cfg),
        "barriers" => run_barrier_check(cfg),
        _ => Err(Error::Usage(format!("unknown study {name:?}"))),
    }
}
