use nalgebra::{DMatrix, DVector};

use crate::QpError;

/// A dense convex quadratic program
///
/// ```text
///     minimize     1/2 w' H w + g' w
///     subject to   A_eq w  = b_eq
///                  A_in w <= b_in
///                  lower <= w <= upper
/// ```
///
/// Bounds may be infinite. Empty constraint blocks are represented by matrices
/// with zero rows.
#[derive(Clone, Debug, PartialEq)]
pub struct QpProblem {
    pub hessian: DMatrix<f64>,
    pub gradient: DVector<f64>,
    pub eq_matrix: DMatrix<f64>,
    pub eq_vector: DVector<f64>,
    pub ineq_matrix: DMatrix<f64>,
    pub ineq_vector: DVector<f64>,
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
}

impl QpProblem {
    /// Unconstrained problem with the given Hessian and gradient.
    pub fn new(hessian: DMatrix<f64>, gradient: DVector<f64>) -> Self {
        let n = gradient.len();
        Self {
            hessian,
            gradient,
            eq_matrix: DMatrix::zeros(0, n),
            eq_vector: DVector::zeros(0),
            ineq_matrix: DMatrix::zeros(0, n),
            ineq_vector: DVector::zeros(0),
            lower: DVector::from_element(n, f64::NEG_INFINITY),
            upper: DVector::from_element(n, f64::INFINITY),
        }
    }

    pub fn with_equalities(mut self, matrix: DMatrix<f64>, vector: DVector<f64>) -> Self {
        self.eq_matrix = matrix;
        self.eq_vector = vector;
        self
    }

    pub fn with_inequalities(mut self, matrix: DMatrix<f64>, vector: DVector<f64>) -> Self {
        self.ineq_matrix = matrix;
        self.ineq_vector = vector;
        self
    }

    pub fn with_bounds(mut self, lower: DVector<f64>, upper: DVector<f64>) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }

    pub fn num_variables(&self) -> usize {
        self.gradient.len()
    }

    pub fn num_equalities(&self) -> usize {
        self.eq_vector.len()
    }

    pub fn num_inequalities(&self) -> usize {
        self.ineq_vector.len()
    }

    /// Objective value at `w`.
    pub fn objective(&self, w: &DVector<f64>) -> f64 {
        0.5 * w.dot(&(&self.hessian * w)) + self.gradient.dot(w)
    }

    /// Check dimensions, finiteness and symmetry of the Hessian.
    pub fn validate(&self) -> Result<(), QpError> {
        let n = self.num_variables();
        let dim = |what: &'static str, expected: (usize, usize), found: (usize, usize)| {
            if expected == found {
                Ok(())
            } else {
                Err(QpError::Dimension {
                    what,
                    expected,
                    found,
                })
            }
        };
        dim("hessian", (n, n), self.hessian.shape())?;
        dim(
            "equality matrix",
            (self.eq_vector.len(), n),
            self.eq_matrix.shape(),
        )?;
        dim(
            "inequality matrix",
            (self.ineq_vector.len(), n),
            self.ineq_matrix.shape(),
        )?;
        dim("lower bounds", (n, 1), self.lower.shape())?;
        dim("upper bounds", (n, 1), self.upper.shape())?;

        let finite = |m: &DMatrix<f64>| m.iter().all(|v| v.is_finite());
        if !finite(&self.hessian)
            || !self.gradient.iter().all(|v| v.is_finite())
            || !finite(&self.eq_matrix)
            || !self.eq_vector.iter().all(|v| v.is_finite())
            || !finite(&self.ineq_matrix)
            || !self.ineq_vector.iter().all(|v| v.is_finite())
        {
            return Err(QpError::NonFinite);
        }
        if self.lower.iter().any(|v| v.is_nan()) || self.upper.iter().any(|v| v.is_nan()) {
            return Err(QpError::NonFinite);
        }
        if let Some(i) = (0..n).find(|&i| self.lower[i] > self.upper[i]) {
            return Err(QpError::CrossedBounds { index: i });
        }

        let scale = self.hessian.amax().max(1.0);
        let asym = (&self.hessian - self.hessian.transpose()).amax();
        if asym > 1e-9 * scale {
            return Err(QpError::NotSymmetric { asymmetry: asym });
        }
        Ok(())
    }
}

/// Identifies one inequality-type constraint of a [`QpProblem`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConstraintRef {
    /// Row `i` of `A_eq w = b_eq`. Only reported for inconsistent equalities.
    Equality(usize),
    /// Row `i` of `A_in w <= b_in`.
    Inequality(usize),
    /// `w[i] >= lower[i]`.
    Lower(usize),
    /// `w[i] <= upper[i]`.
    Upper(usize),
}

impl std::fmt::Display for ConstraintRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConstraintRef::Equality(i) => write!(f, "equality row {i}"),
            ConstraintRef::Inequality(i) => write!(f, "inequality row {i}"),
            ConstraintRef::Lower(i) => write!(f, "lower bound on variable {i}"),
            ConstraintRef::Upper(i) => write!(f, "upper bound on variable {i}"),
        }
    }
}
