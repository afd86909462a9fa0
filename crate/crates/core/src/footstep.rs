//! Footsteps and the line-oriented plan format.
//!
//! One record per line, columns in fixed order, whitespace separated:
//!
//! ```text
//! # side x y yaw t_imp
//! left 0 0.07 0 0
//! right 0 -0.07 0 1
//! ```
//!
//! `side` is `left` or `right`, positions are metres, yaw radians and the
//! impact time seconds. Floats are written in shortest round-trip form so that
//! identical plans serialize to identical bytes.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lipm::Point2;
use crate::rotation::Rotation3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FootSide {
    Left,
    Right,
}

impl FootSide {
    pub fn opposite(self) -> Self {
        match self {
            FootSide::Left => FootSide::Right,
            FootSide::Right => FootSide::Left,
        }
    }

    /// +1 for left, -1 for right: the direction of the foot along the
    /// body's lateral axis.
    pub fn lateral_sign(self) -> f64 {
        match self {
            FootSide::Left => 1.0,
            FootSide::Right => -1.0,
        }
    }
}

impl fmt::Display for FootSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FootSide::Left => "left",
            FootSide::Right => "right",
        })
    }
}

impl FromStr for FootSide {
    type Err = PlanFormatError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "left" => Ok(FootSide::Left),
            "right" => Ok(FootSide::Right),
            other => Err(PlanFormatError::Side(other.to_owned())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Footstep {
    pub side: FootSide,
    pub position: Point2,
    pub yaw: f64,
    /// Time from which this foot carries the stance ZMP.
    pub impact_time: f64,
}

impl Footstep {
    pub fn new(side: FootSide, position: Point2, yaw: f64, impact_time: f64) -> Self {
        Self {
            side,
            position,
            yaw,
            impact_time,
        }
    }

    pub fn rotation(&self) -> Rotation3 {
        Rotation3::from_yaw(self.yaw)
    }

    pub fn position3(&self) -> Vector3<f64> {
        Vector3::new(self.position.x, self.position.y, 0.0)
    }

    /// `p` expressed in this foot's planar frame.
    pub fn to_local(&self, p: Point2) -> Point2 {
        let (s, c) = self.yaw.sin_cos();
        let d = p - self.position;
        Point2::new(c * d.x + s * d.y, -s * d.x + c * d.y)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanFormatError {
    #[error("unknown foot side {0:?}")]
    Side(String),
    #[error("line {line}: expected 5 columns (side x y yaw t_imp), found {found}")]
    Columns { line: usize, found: usize },
    #[error("line {line}: {source}")]
    Number {
        line: usize,
        source: std::num::ParseFloatError,
    },
    #[error("line {line}: {source}")]
    BadSide {
        line: usize,
        source: Box<PlanFormatError>,
    },
}

pub fn write_plan(steps: &[Footstep]) -> String {
    let mut out = String::from("# side x y yaw t_imp\n");
    for s in steps {
        let _ = writeln!(
            out,
            "{} {} {} {} {}",
            s.side, s.position.x, s.position.y, s.yaw, s.impact_time
        );
    }
    out
}

pub fn read_plan(text: &str) -> Result<Vec<Footstep>, PlanFormatError> {
    let mut steps = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = body.split_whitespace().collect();
        if cols.len() != 5 {
            return Err(PlanFormatError::Columns {
                line,
                found: cols.len(),
            });
        }
        let side = cols[0].parse().map_err(|e| PlanFormatError::BadSide {
            line,
            source: Box::new(e),
        })?;
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|source| PlanFormatError::Number { line, source })
        };
        steps.push(Footstep::new(
            side,
            Point2::new(num(cols[1])?, num(cols[2])?),
            num(cols[3])?,
            num(cols[4])?,
        ));
    }
    Ok(steps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_text_round_trip() {
        let steps = vec![
            Footstep::new(FootSide::Left, Point2::new(0.0, 0.07), 0.0, 0.0),
            Footstep::new(FootSide::Right, Point2::new(0.1 + 0.2, -0.07), -0.25, 1.0),
        ];
        let text = write_plan(&steps);
        assert!(text.starts_with("# side x y yaw t_imp\n"));
        assert_eq!(read_plan(&text).unwrap(), steps);
    }

    #[test]
    fn malformed_records_are_reported_with_line_numbers() {
        assert!(matches!(
            read_plan("left 0 0 0"),
            Err(PlanFormatError::Columns { line: 1, found: 4 })
        ));
        assert!(matches!(
            read_plan("# c\nmiddle 0 0 0 0"),
            Err(PlanFormatError::BadSide { line: 2, .. })
        ));
    }

    #[test]
    fn local_coordinates_follow_the_foot_yaw() {
        let f = Footstep::new(FootSide::Right, Point2::new(1.0, 0.0), std::f64::consts::FRAC_PI_2, 0.0);
        let p = f.to_local(Point2::new(1.0, 0.2));
        assert!((p - Point2::new(0.2, 0.0)).amax() < 1e-15);
    }
}
