//! Phase bookkeeping for a footstep plan.
//!
//! With footsteps `F_0 .. F_M` and impact times `t_0 < .. < t_M`, the ZMP
//! reference is the midpoint of `F_0, F_1` until `t_1`, the centre of the
//! stance foot `F_k` on `[t_k, t_k+1]`, and the midpoint of the last two feet
//! after `t_M`. Double-support windows of width `ds_ratio * min(d_k-1, d_k)`
//! are centred on every impact time `t_1 .. t_M` (`d_k` being the step
//! durations, with the last one repeated). In between, foot `F_k+1` swings from
//! `F_k-1` while `F_k` carries the robot.

use thiserror::Error;

use crate::footstep::{FootSide, Footstep};
use crate::lipm::Point2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TimelineError {
    #[error("a timeline needs at least two footsteps, got {0}")]
    TooFewSteps(usize),
    #[error("impact time of footstep {index} does not exceed the previous one")]
    ImpactOrder { index: usize },
    #[error("footsteps {index} and {} are on the same side", index - 1)]
    SameSide { index: usize },
    #[error("double-support ratio must lie in [0, 1), got {0}")]
    DsRatio(f64),
}

/// Feet in contact during a phase, as indices into the footstep list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Support {
    Double { first: usize, second: usize },
    Single {
        stance: usize,
        swing_from: usize,
        swing_to: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phase {
    pub start: f64,
    /// `f64::INFINITY` for the final standing phase.
    pub end: f64,
    pub support: Support,
}

impl Phase {
    pub fn is_double(&self) -> bool {
        matches!(self.support, Support::Double { .. })
    }

    pub fn label(&self) -> &'static str {
        if self.is_double() {
            "DS"
        } else {
            "SS"
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaitTimeline {
    steps: Vec<Footstep>,
    ds_ratio: f64,
    durations: Vec<f64>,
    ds_widths: Vec<f64>,
    zmp: Vec<Point2>,
    phases: Vec<Phase>,
}

pub fn timeline_from_footsteps(steps: &[Footstep], ds_ratio: f64) -> Result<GaitTimeline, TimelineError> {
    GaitTimeline::new(steps.to_vec(), ds_ratio)
}

impl GaitTimeline {
    pub fn new(steps: Vec<Footstep>, ds_ratio: f64) -> Result<Self, TimelineError> {
        if steps.len() < 2 {
            return Err(TimelineError::TooFewSteps(steps.len()));
        }
        if !(0.0..1.0).contains(&ds_ratio) {
            return Err(TimelineError::DsRatio(ds_ratio));
        }
        for i in 1..steps.len() {
            if !(steps[i].impact_time > steps[i - 1].impact_time) {
                return Err(TimelineError::ImpactOrder { index: i });
            }
            if steps[i].side == steps[i - 1].side {
                return Err(TimelineError::SameSide { index: i });
            }
        }
        let m = steps.len() - 1;
        let mut durations: Vec<f64> = steps
            .windows(2)
            .map(|w| w[1].impact_time - w[0].impact_time)
            .collect();
        durations.push(durations[m - 1]);

        let mut ds_widths = vec![0.0; m + 1];
        for k in 1..=m {
            ds_widths[k] = ds_ratio * durations[k - 1].min(durations[k]);
        }

        let mut zmp = Vec::with_capacity(m + 1);
        zmp.push(0.5 * (steps[0].position + steps[1].position));
        for step in &steps[1..m] {
            zmp.push(step.position);
        }
        zmp.push(0.5 * (steps[m - 1].position + steps[m].position));

        let tau = |k: usize| steps[k].impact_time;
        let mut phases = vec![Phase {
            start: tau(0),
            end: tau(1) - 0.5 * ds_widths[1],
            support: Support::Double { first: 0, second: 1 },
        }];
        for k in 1..=m {
            let half = 0.5 * ds_widths[k];
            if half > 0.0 {
                phases.push(Phase {
                    start: tau(k) - half,
                    end: tau(k) + half,
                    support: Support::Double {
                        first: k - 1,
                        second: k,
                    },
                });
            }
            if k < m {
                phases.push(Phase {
                    start: tau(k) + half,
                    end: tau(k + 1) - 0.5 * ds_widths[k + 1],
                    support: Support::Single {
                        stance: k,
                        swing_from: k - 1,
                        swing_to: k + 1,
                    },
                });
            }
        }
        phases.push(Phase {
            start: tau(m) + 0.5 * ds_widths[m],
            end: f64::INFINITY,
            support: Support::Double {
                first: m - 1,
                second: m,
            },
        });

        Ok(Self {
            steps,
            ds_ratio,
            durations,
            ds_widths,
            zmp,
            phases,
        })
    }

    pub fn steps(&self) -> &[Footstep] {
        &self.steps
    }

    /// Number of ZMP steps `M` (footsteps minus one).
    pub fn num_steps(&self) -> usize {
        self.steps.len() - 1
    }

    pub fn ds_ratio(&self) -> f64 {
        self.ds_ratio
    }

    /// ZMP references `r_0 .. r_M`; `r_M` is the terminal one.
    pub fn zmp_refs(&self) -> &[Point2] {
        &self.zmp
    }

    /// Step durations `d_0 .. d_M-1` followed by the repeated last one.
    pub fn durations(&self) -> &[f64] {
        &self.durations
    }

    pub fn impact_time(&self, k: usize) -> f64 {
        self.steps[k].impact_time
    }

    /// Width of the double-support window around impact `k` (`k >= 1`).
    pub fn ds_width(&self, k: usize) -> f64 {
        self.ds_widths[k]
    }

    pub fn phases(&self) -> &[Phase] {
        &self.phases
    }

    pub fn start_time(&self) -> f64 {
        self.steps[0].impact_time
    }

    /// Start of the final standing phase.
    pub fn end_time(&self) -> f64 {
        self.phases.last().expect("at least one phase").start
    }

    /// Phase containing `t`; times before the start map to the first phase.
    pub fn phase_at(&self, t: f64) -> &Phase {
        let idx = self.phases.partition_point(|p| p.start <= t);
        &self.phases[idx.saturating_sub(1)]
    }

    /// Number of single-support phases, i.e. swing motions.
    pub fn num_swings(&self) -> usize {
        self.steps.len().saturating_sub(2)
    }

    /// Landing time of footstep `j`: the end of the single-support phase in
    /// which it is swung. The initial feet are on the ground from the start.
    pub fn landing_time(&self, j: usize) -> f64 {
        if j < 2 {
            f64::NEG_INFINITY
        } else {
            self.impact_time(j) - 0.5 * self.ds_widths[j]
        }
    }

    /// Index of the latest footstep of `side` on the ground at `t`, or the
    /// footstep it is currently swinging towards.
    pub fn foot_index(&self, side: FootSide, t: f64) -> usize {
        let mut idx = None;
        for (j, s) in self.steps.iter().enumerate() {
            if s.side != side {
                continue;
            }
            if idx.is_none() || self.liftoff_time(j) <= t {
                idx = Some(j);
            }
        }
        idx.expect("both sides present")
    }

    /// Time at which footstep `j` starts moving towards its position.
    pub fn liftoff_time(&self, j: usize) -> f64 {
        if j < 2 {
            f64::NEG_INFINITY
        } else {
            self.impact_time(j - 1) + 0.5 * self.ds_widths[j - 1]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn walk(n: usize, duration: f64) -> Vec<Footstep> {
        (0..n)
            .map(|i| {
                let side = if i % 2 == 0 { FootSide::Left } else { FootSide::Right };
                let x = if i < 2 { 0.0 } else { 0.1 * (i - 1) as f64 };
                Footstep::new(side, Point2::new(x, 0.07 * side.lateral_sign()), 0.0, i as f64 * duration)
            })
            .collect()
    }

    #[test]
    fn zero_ratio_gives_instantaneous_transitions() {
        let tl = GaitTimeline::new(walk(4, 1.0), 0.0).unwrap();
        assert!(tl.phases().windows(2).all(|p| p[0].end == p[1].start));
        let singles = tl.phases().iter().filter(|p| !p.is_double()).count();
        assert_eq!(singles, 2);
        assert!(tl.phases().iter().all(|p| p.end > p.start));
    }

    #[test]
    fn quarter_ratio_on_unit_steps() {
        let tl = GaitTimeline::new(walk(5, 1.0), 0.25).unwrap();
        for p in &tl.phases()[1..tl.phases().len() - 1] {
            let len = p.end - p.start;
            if p.is_double() {
                assert!((len - 0.25).abs() < 1e-12);
            } else {
                assert!((len - 0.75).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zmp_references_follow_the_stance_foot() {
        let steps = walk(4, 1.0);
        let tl = GaitTimeline::new(steps.clone(), 0.2).unwrap();
        let r = tl.zmp_refs();
        assert_eq!(r.len(), 4);
        assert_eq!(r[0], 0.5 * (steps[0].position + steps[1].position));
        assert_eq!(r[1], steps[1].position);
        assert_eq!(r[2], steps[2].position);
        assert_eq!(r[3], 0.5 * (steps[2].position + steps[3].position));
    }

    #[test]
    fn phase_lookup_and_swing_indices() {
        let tl = GaitTimeline::new(walk(4, 1.0), 0.2).unwrap();
        let p = tl.phase_at(1.5);
        assert_eq!(
            p.support,
            Support::Single {
                stance: 1,
                swing_from: 0,
                swing_to: 2
            }
        );
        assert_eq!(tl.phase_at(-1.0).start, 0.0);
        assert_eq!(tl.foot_index(FootSide::Left, 0.5), 0);
        assert_eq!(tl.foot_index(FootSide::Left, 1.5), 2);
        assert_eq!(tl.foot_index(FootSide::Right, 1.5), 1);
    }

    #[test]
    fn malformed_plans_are_rejected() {
        let mut steps = walk(3, 1.0);
        assert_eq!(GaitTimeline::new(steps[..1].to_vec(), 0.2), Err(TimelineError::TooFewSteps(1)));
        assert_eq!(GaitTimeline::new(steps.clone(), 1.0), Err(TimelineError::DsRatio(1.0)));
        steps[2].impact_time = 1.0;
        assert_eq!(GaitTimeline::new(steps.clone(), 0.2), Err(TimelineError::ImpactOrder { index: 2 }));
        steps[2].impact_time = 2.0;
        steps[2].side = FootSide::Right;
        assert_eq!(GaitTimeline::new(steps, 0.2), Err(TimelineError::SameSide { index: 2 }));
    }
}
