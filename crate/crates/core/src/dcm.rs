//! DCM reference trajectories: per-step boundary values from a backward
//! recursion, exponential single-support segments, and cubic
//! double-support blends that keep the trajectory C1.

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::lipm::Point2;
use crate::spline::Cubic;
use crate::timeline::GaitTimeline;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DcmError {
    #[error("need at least two ZMP references and one duration per non-terminal reference")]
    Shape,
    #[error("duration {index} must be positive, got {value}")]
    Duration { index: usize, value: f64 },
    #[error("segment interval [{start}, {end}] is empty")]
    Interval { start: f64, end: f64 },
    #[error("natural frequency must be positive, got {0}")]
    Omega(f64),
}

/// DCM at the start and end of a step that holds the ZMP at `zmp` for `t_step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDcmBoundary {
    pub xi_ios: Point2,
    pub xi_eos: Point2,
    pub zmp: Point2,
    pub t_step: f64,
}

/// Boundaries for steps `0 .. N-1` given ZMPs `r_0 .. r_N` (`r_N` terminal)
/// and durations `t_0 .. t_N-1`. The last step ends on the terminal ZMP and
/// each earlier step ends where the next one starts.
pub fn backward_recursion(zmp_refs: &[Point2], durations: &[f64], omega: f64) -> Result<Vec<StepDcmBoundary>, DcmError> {
    if !(omega > 0.0) {
        return Err(DcmError::Omega(omega));
    }
    let n = durations.len();
    if n == 0 || zmp_refs.len() != n + 1 {
        return Err(DcmError::Shape);
    }
    if let Some((index, &value)) = durations.iter().enumerate().find(|(_, &d)| !(d > 0.0)) {
        return Err(DcmError::Duration { index, value });
    }
    let mut out = vec![
        StepDcmBoundary {
            xi_ios: Point2::zeros(),
            xi_eos: Point2::zeros(),
            zmp: Point2::zeros(),
            t_step: 0.0,
        };
        n
    ];
    let mut eos = zmp_refs[n];
    for i in (0..n).rev() {
        let r = zmp_refs[i];
        let ios = r + (-omega * durations[i]).exp() * (eos - r);
        out[i] = StepDcmBoundary {
            xi_ios: ios,
            xi_eos: eos,
            zmp: r,
            t_step: durations[i],
        };
        eos = ios;
    }
    Ok(out)
}

/// `xi(t) = r + exp(w (t - t_step)) (xi_eos - r)` on local time `t`, shifted
/// to start at absolute time `start`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpSegment {
    pub boundary: StepDcmBoundary,
    pub omega: f64,
    pub start: f64,
}

pub fn ss_segment(boundary: &StepDcmBoundary, omega: f64) -> ExpSegment {
    ExpSegment {
        boundary: *boundary,
        omega,
        start: 0.0,
    }
}

impl ExpSegment {
    pub fn starting_at(mut self, start: f64) -> Self {
        self.start = start;
        self
    }

    /// Position and velocity at absolute time `t`.
    pub fn eval(&self, t: f64) -> (Point2, Point2) {
        let b = &self.boundary;
        let d = b.xi_eos - b.zmp;
        let e = (self.omega * (t - self.start - b.t_step)).exp();
        (b.zmp + e * d, self.omega * e * d)
    }
}

/// Per-axis cubic on absolute time `[start, start + duration]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicSegment {
    pub x: Cubic,
    pub y: Cubic,
    pub start: f64,
}

impl CubicSegment {
    pub fn eval(&self, t: f64) -> (Point2, Point2) {
        let tau = t - self.start;
        let (px, vx) = self.x.eval(tau);
        let (py, vy) = self.y.eval(tau);
        (Point2::new(px, py), Point2::new(vx, vy))
    }
}

/// Hermite cubic matching positions and velocities at both ends of `(t_i, t_e)`.
pub fn ds_segment(
    xi_start: Point2,
    xid_start: Point2,
    xi_end: Point2,
    xid_end: Point2,
    interval: (f64, f64),
) -> Result<CubicSegment, DcmError> {
    let (start, end) = interval;
    let d = end - start;
    if !(d > 0.0) {
        return Err(DcmError::Interval { start, end });
    }
    Ok(CubicSegment {
        x: Cubic::hermite(xi_start.x, xid_start.x, xi_end.x, xid_end.x, d),
        y: Cubic::hermite(xi_start.y, xid_start.y, xi_end.y, xid_end.y, d),
        start,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SegmentKind {
    Exponential(ExpSegment),
    Cubic(CubicSegment),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub kind: SegmentKind,
    pub start: f64,
    /// `f64::INFINITY` for the final standing segment.
    pub end: f64,
    pub single_support: bool,
}

impl Segment {
    pub fn eval(&self, t: f64) -> (Point2, Point2) {
        match &self.kind {
            SegmentKind::Exponential(e) => e.eval(t),
            SegmentKind::Cubic(c) => c.eval(t),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcmSample {
    pub dcm: Point2,
    pub dcm_velocity: Point2,
}

impl DcmSample {
    pub fn implied_zmp(&self, omega: f64) -> Point2 {
        self.dcm - self.dcm_velocity / omega
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DcmTrajectory {
    omega: f64,
    segments: Vec<Segment>,
}

/// Build the DCM reference for `timeline`.
///
/// The robot starts at rest above the initial ZMP. A cubic takes the DCM from
/// rest to the first single-support exponential at the end of the first
/// double-support window; each later window blends two exponentials, and the
/// final one brings the DCM to rest on the terminal ZMP.
pub fn build_trajectory(timeline: &GaitTimeline, omega: f64) -> Result<DcmTrajectory, DcmError> {
    let m = timeline.num_steps();
    let zmp = timeline.zmp_refs();
    let durations = timeline.durations();
    let boundaries = backward_recursion(zmp, &durations[..m], omega)?;

    let tau = |k: usize| timeline.impact_time(k);
    let half = |k: usize| 0.5 * timeline.ds_width(k);
    let terminal = StepDcmBoundary {
        xi_ios: zmp[m],
        xi_eos: zmp[m],
        zmp: zmp[m],
        t_step: durations[m],
    };
    let exp = |k: usize| {
        let b = if k < m { boundaries[k] } else { terminal };
        ExpSegment {
            boundary: b,
            omega,
            start: tau(k),
        }
    };

    let mut segments = Vec::with_capacity(2 * m + 1);
    let first_end = tau(1) + half(1);
    let (xi1, xid1) = exp(1).eval(first_end);
    segments.push(Segment {
        kind: SegmentKind::Cubic(ds_segment(zmp[0], Point2::zeros(), xi1, xid1, (tau(0), first_end))?),
        start: tau(0),
        end: first_end,
        single_support: false,
    });
    for k in 1..m {
        let ss_start = tau(k) + half(k);
        let ss_end = tau(k + 1) - half(k + 1);
        segments.push(Segment {
            kind: SegmentKind::Exponential(exp(k)),
            start: ss_start,
            end: ss_end,
            single_support: true,
        });
        if half(k + 1) > 0.0 {
            let ds_end = tau(k + 1) + half(k + 1);
            let (a, ad) = exp(k).eval(ss_end);
            let (b, bd) = exp(k + 1).eval(ds_end);
            segments.push(Segment {
                kind: SegmentKind::Cubic(ds_segment(a, ad, b, bd, (ss_end, ds_end))?),
                start: ss_end,
                end: ds_end,
                single_support: false,
            });
        }
    }
    segments.push(Segment {
        kind: SegmentKind::Exponential(exp(m)),
        start: tau(m) + half(m),
        end: f64::INFINITY,
        single_support: false,
    });
    Ok(DcmTrajectory { omega, segments })
}

#[derive(Serialize)]
struct CsvRow {
    t: f64,
    xi_x: f64,
    xi_y: f64,
    xi_dot_x: f64,
    xi_dot_y: f64,
    zmp_x: f64,
    zmp_y: f64,
    phase: &'static str,
}

impl DcmTrajectory {
    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn start_time(&self) -> f64 {
        self.segments[0].start
    }

    /// Time after which the DCM rests on the terminal ZMP.
    pub fn end_time(&self) -> f64 {
        self.segments.last().expect("non-empty").start
    }

    fn segment_at(&self, t: f64) -> &Segment {
        let idx = self.segments.partition_point(|s| s.start <= t);
        &self.segments[idx.saturating_sub(1)]
    }

    /// DCM and its velocity at `t`; times before the start hold the initial value.
    pub fn eval(&self, t: f64) -> DcmSample {
        let t = t.max(self.start_time());
        let (dcm, dcm_velocity) = self.segment_at(t).eval(t);
        DcmSample { dcm, dcm_velocity }
    }

    pub fn implied_zmp(&self, t: f64) -> Point2 {
        self.eval(t).implied_zmp(self.omega)
    }

    pub fn is_single_support(&self, t: f64) -> bool {
        self.segment_at(t).single_support
    }

    /// Columns `t, xi_x, xi_y, xi_dot_x, xi_dot_y, zmp_x, zmp_y, phase` sampled
    /// every `dt` on `[t0, t1]`.
    pub fn write_csv<W: Write>(&self, out: W, t0: f64, t1: f64, dt: f64) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        let n = ((t1 - t0) / dt + 1e-9).floor() as usize;
        for i in 0..=n {
            let t = t0 + i as f64 * dt;
            let s = self.eval(t);
            let r = s.implied_zmp(self.omega);
            w.serialize(CsvRow {
                t,
                xi_x: s.dcm.x,
                xi_y: s.dcm.y,
                xi_dot_x: s.dcm_velocity.x,
                xi_dot_y: s.dcm_velocity.y,
                zmp_x: r.x,
                zmp_y: r.y,
                phase: if self.is_single_support(t) { "SS" } else { "DS" },
            })?;
        }
        w.flush()?;
        Ok(())
    }
}
