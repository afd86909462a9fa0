//! Velocity sweeps over the four controller/mode combinations.

use std::io::Write;
use std::sync::Arc;

use dcm_wholebody::KinematicModel;
use rayon::prelude::*;
use serde::Serialize;

use crate::metrics::Metrics;
use crate::run::{load_model, run_with_model};
use crate::scenario::{mode_label, Architecture, Scenario};
use crate::SimError;

#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub controller: &'static str,
    pub mode: &'static str,
    pub velocity: f64,
    pub passed: bool,
    /// Why the point failed before or during the run, if not by falling.
    pub reason: Option<String>,
    pub max_dcm_error: Option<f64>,
    pub max_com_error: Option<f64>,
    pub steps_completed: Option<usize>,
    pub fall_time: Option<f64>,
    #[serde(skip)]
    pub architecture: Option<Architecture>,
}

impl SweepPoint {
    fn from_run(arch: Architecture, velocity: f64, result: Result<Metrics, SimError>) -> Self {
        let mut p = SweepPoint {
            controller: arch.controller.label(),
            mode: mode_label(arch.mode),
            velocity,
            passed: false,
            reason: None,
            max_dcm_error: None,
            max_com_error: None,
            steps_completed: None,
            fall_time: None,
            architecture: Some(arch),
        };
        match result {
            Ok(m) => {
                p.passed = m.passed();
                p.reason = m.failure.clone();
                p.max_dcm_error = Some(m.max_dcm_error);
                p.max_com_error = Some(m.max_com_error);
                p.steps_completed = Some(m.steps_completed);
                p.fall_time = m.fall_time;
            }
            // e.g. a speed the footstep planner cannot realize
            Err(e) => p.reason = Some(e.to_string()),
        }
        p
    }
}

/// Run `base` for every architecture and forward speed, in parallel.
pub fn sweep(base: &Scenario, architectures: &[Architecture], velocities: &[f64]) -> Result<Vec<SweepPoint>, SimError> {
    base.validate()?;
    let model = load_model(base)?;
    Ok(sweep_with_model(base, architectures, velocities, &model))
}

fn sweep_with_model(
    base: &Scenario,
    architectures: &[Architecture],
    velocities: &[f64],
    model: &Arc<KinematicModel>,
) -> Vec<SweepPoint> {
    let jobs: Vec<(Architecture, f64)> = architectures
        .iter()
        .flat_map(|&a| velocities.iter().map(move |&v| (a, v)))
        .collect();
    jobs.par_iter()
        .map(|&(arch, v)| {
            let mut s = base.clone();
            s.architecture = arch;
            s.set_forward_speed(v);
            let result = run_with_model(&s, Arc::clone(model)).map(|r| r.metrics);
            SweepPoint::from_run(arch, v, result)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub architecture: Architecture,
    /// Largest speed that completed without a fall; `None` if none did.
    pub max_velocity: Option<f64>,
}

impl ComparisonRow {
    pub fn controller(&self) -> &'static str {
        self.architecture.controller.label()
    }

    pub fn mode(&self) -> &'static str {
        mode_label(self.architecture.mode)
    }
}

/// Largest passing speed per architecture, in [`Architecture::ALL`] order.
pub fn compare_architectures(base: &Scenario, velocities: &[f64]) -> Result<(Vec<ComparisonRow>, Vec<SweepPoint>), SimError> {
    let points = sweep(base, &Architecture::ALL, velocities)?;
    let rows = Architecture::ALL
        .iter()
        .map(|&a| ComparisonRow {
            architecture: a,
            max_velocity: points
                .iter()
                .filter(|p| p.architecture == Some(a) && p.passed)
                .map(|p| p.velocity)
                .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v)))),
        })
        .collect();
    Ok((rows, points))
}

pub fn write_comparison_csv<W: Write>(rows: &[ComparisonRow], out: W) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["SimplifiedModelControl", "WholeBodyQPControl", "MaxStraightVelocity"])?;
    for r in rows {
        let v = r.max_velocity.map_or(String::new(), |v| v.to_string());
        w.write_record([r.controller(), r.mode(), v.as_str()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep_csv<W: Write>(points: &[SweepPoint], out: W) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "controller",
        "mode",
        "velocity",
        "passed",
        "max_dcm_error",
        "max_com_error",
        "steps_completed",
        "fall_time",
        "reason",
    ])?;
    let opt = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
    for p in points {
        w.write_record([
            p.controller.to_string(),
            p.mode.to_string(),
            p.velocity.to_string(),
            p.passed.to_string(),
            opt(p.max_dcm_error),
            opt(p.max_com_error),
            p.steps_completed.map_or(String::new(), |n| n.to_string()),
            opt(p.fall_time),
            p.reason.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
