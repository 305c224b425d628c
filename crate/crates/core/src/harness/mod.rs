//! Experiment orchestration: configuration, studies over the ε ladder, and
//! CSV/SVG reporting.

pub mod config;
pub mod report;
pub mod studies;
pub mod svg;

pub use config::Config;
pub use report::{verify_report, Cell, Check, ExperimentReport, Fit, Metadata};
pub use studies::{
    run_barrier_check, run_front_studies, run_generation_study, run_no_interface_study, run_simulation,
    run_speed_study, run_study, run_thickness_study, run_wave_study, StudyOutput,
};

/// Names accepted by [`run_study`].
pub const STUDIES: [&str; 7] = ["wave", "simulate", "speed", "thickness", "generation", "no-interface", "barriers"];
