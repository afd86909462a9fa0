//! Convex support polygons in vertex and half-plane form.

use thiserror::Error;

use crate::footstep::Footstep;
use crate::lipm::Point2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolygonError {
    #[error("support polygon needs a nonempty interior")]
    Degenerate,
    #[error("foot dimensions must be positive")]
    FootSize,
}

/// Rectangular sole dimensions, centred on the footstep position.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FootSize {
    pub length: f64,
    pub width: f64,
}

impl Default for FootSize {
    fn default() -> Self {
        Self {
            length: 0.19,
            width: 0.09,
        }
    }
}

/// Counter-clockwise vertices with matching unit-normal half-planes
/// `normals[i] . p <= offsets[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportPolygon {
    vertices: Vec<Point2>,
    normals: Vec<Point2>,
    offsets: Vec<f64>,
}

fn cross(o: Point2, a: Point2, b: Point2) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

impl SupportPolygon {
    /// Convex hull of `points` (monotone chain).
    pub fn hull(points: &[Point2]) -> Result<Self, PolygonError> {
        let mut pts: Vec<Point2> = points.to_vec();
        pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
        pts.dedup();
        if pts.len() < 3 {
            return Err(PolygonError::Degenerate);
        }
        let mut lower: Vec<Point2> = Vec::new();
        for &p in &pts {
            while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
                lower.pop();
            }
            lower.push(p);
        }
        let mut upper: Vec<Point2> = Vec::new();
        for &p in pts.iter().rev() {
            while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
                upper.pop();
            }
            upper.push(p);
        }
        lower.pop();
        upper.pop();
        lower.extend(upper);
        Self::from_ccw(lower)
    }

    fn from_ccw(vertices: Vec<Point2>) -> Result<Self, PolygonError> {
        if vertices.len() < 3 {
            return Err(PolygonError::Degenerate);
        }
        let n = vertices.len();
        let mut area = 0.0;
        let mut normals = Vec::with_capacity(n);
        let mut offsets = Vec::with_capacity(n);
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            area += a.x * b.y - b.x * a.y;
            let edge = b - a;
            let normal = Point2::new(edge.y, -edge.x).normalize();
            normals.push(normal);
            offsets.push(normal.dot(&a));
        }
        if !(area > 1e-12) {
            return Err(PolygonError::Degenerate);
        }
        Ok(Self {
            vertices,
            normals,
            offsets,
        })
    }

    pub fn foot(step: &Footstep, size: FootSize) -> Result<Self, PolygonError> {
        Self::hull(&foot_corners(step, size)?)
    }

    /// Convex hull of two foot rectangles.
    pub fn feet(a: &Footstep, b: &Footstep, size: FootSize) -> Result<Self, PolygonError> {
        let mut pts = foot_corners(a, size)?.to_vec();
        pts.extend(foot_corners(b, size)?);
        Self::hull(&pts)
    }

    /// Half-plane set without vertices or any consistency check. Only meant
    /// for exercising infeasibility handling.
    #[cfg(test)]
    pub(crate) fn from_half_planes_unchecked(normals: Vec<Point2>, offsets: Vec<f64>) -> Self {
        Self {
            vertices: Vec::new(),
            normals,
            offsets,
        }
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn normals(&self) -> &[Point2] {
        &self.normals
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    /// Largest `normal . p - offset`; positive outside.
    pub fn max_violation(&self, p: Point2) -> f64 {
        self.normals
            .iter()
            .zip(&self.offsets)
            .map(|(n, b)| n.dot(&p) - b)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, p: Point2, tol: f64) -> bool {
        self.max_violation(p) <= tol
    }

    /// Euclidean distance from `p` to the polygon; zero inside.
    pub fn distance(&self, p: Point2) -> f64 {
        if self.contains(p, 0.0) {
            return 0.0;
        }
        let n = self.vertices.len();
        (0..n)
            .map(|i| {
                let a = self.vertices[i];
                let b = self.vertices[(i + 1) % n];
                let ab = b - a;
                let s = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
                (a + s * ab - p).norm()
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn centroid(&self) -> Point2 {
        let n = self.vertices.len();
        let (mut a, mut c) = (0.0, Point2::zeros());
        for i in 0..n {
            let p = self.vertices[i];
            let q = self.vertices[(i + 1) % n];
            let w = p.x * q.y - q.x * p.y;
            a += w;
            c += (p + q) * w;
        }
        c / (3.0 * a)
    }
}

fn foot_corners(step: &Footstep, size: FootSize) -> Result<[Point2; 4], PolygonError> {
    if !(size.length > 0.0 && size.width > 0.0) {
        return Err(PolygonError::FootSize);
    }
    let (s, c) = step.yaw.sin_cos();
    let (hl, hw) = (0.5 * size.length, 0.5 * size.width);
    let corner = |dx: f64, dy: f64| step.position + Point2::new(c * dx - s * dy, s * dx + c * dy);
    Ok([corner(hl, hw), corner(-hl, hw), corner(-hl, -hw), corner(hl, -hw)])
}
