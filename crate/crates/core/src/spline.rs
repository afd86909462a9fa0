/// Scalar cubic `a0 + a1 t + a2 t^2 + a3 t^3` on local time `t in [0, duration]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cubic {
    pub coeffs: [f64; 4],
    pub duration: f64,
}

impl Cubic {
    pub fn constant(p: f64) -> Self {
        Self {
            coeffs: [p, 0.0, 0.0, 0.0],
            duration: 0.0,
        }
    }

    /// Hermite cubic with position/velocity `(p0, v0)` at 0 and `(p1, v1)` at `duration`.
    /// `duration` must be positive.
    pub fn hermite(p0: f64, v0: f64, p1: f64, v1: f64, duration: f64) -> Self {
        let t = duration;
        let dp = p1 - p0;
        Self {
            coeffs: [
                p0,
                v0,
                (3.0 * dp - (2.0 * v0 + v1) * t) / (t * t),
                (-2.0 * dp + (v0 + v1) * t) / (t * t * t),
            ],
            duration,
        }
    }

    /// Position and velocity at local time `t`.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let [a0, a1, a2, a3] = self.coeffs;
        (
            a0 + t * (a1 + t * (a2 + t * a3)),
            a1 + t * (2.0 * a2 + 3.0 * t * a3),
        )
    }

    pub fn acceleration(&self, t: f64) -> f64 {
        2.0 * self.coeffs[2] + 6.0 * self.coeffs[3] * t
    }
}

/// Rest-to-rest smoothstep `3s^2 - 2s^3` and its derivative.
pub fn smoothstep(s: f64) -> (f64, f64) {
    let s = s.clamp(0.0, 1.0);
    (s * s * (3.0 - 2.0 * s), 6.0 * s * (1.0 - s))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_reproduces_boundary_values() {
        let c = Cubic::hermite(0.3, -1.0, 1.2, 0.5, 0.7);
        let (p0, v0) = c.eval(0.0);
        let (p1, v1) = c.eval(0.7);
        assert!((p0 - 0.3).abs() < 1e-15 && (v0 + 1.0).abs() < 1e-15);
        assert!((p1 - 1.2).abs() < 1e-14 && (v1 - 0.5).abs() < 1e-14);
    }

    #[test]
    fn unit_rest_to_rest_coefficients() {
        let c = Cubic::hermite(0.0, 0.0, 1.0, 0.0, 1.0);
        assert_eq!(c.coeffs, [0.0, 0.0, 3.0, -2.0]);
    }
}
