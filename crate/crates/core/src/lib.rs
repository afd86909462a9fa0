//! Walking-pattern generation and simplified-model control for bipeds.
//!
//! * [`lipm`]: pendulum model, DCM, exact discretization.
//! * [`rotation`]: rotations and the skew/vee rotation error.
//! * [`unicycle`], [`footstep`], [`timeline`], [`swing`]: footstep planning
//!   and feet trajectories.
//! * [`dcm`]: DCM reference trajectories.
//! * [`polygon`], [`control`]: support polygons and the DCM / ZMP-CoM
//!   controllers.

pub mod control;
pub mod dcm;
pub mod footstep;
pub mod lipm;
pub mod polygon;
pub mod rotation;
pub mod spline;
pub mod swing;
pub mod timeline;
pub mod unicycle;

pub use lipm::{Point2, PendulumParams, SimplifiedState};
pub use rotation::Rotation3;
