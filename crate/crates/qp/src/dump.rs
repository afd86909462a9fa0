//! Plain-text problem dump for debugging.
//!
//! Sections appear in a fixed order, each introduced by a header line giving
//! its name and shape, followed by one line per matrix row (vectors are a
//! single line). Values are written in shortest round-trip form, infinite
//! bounds as `inf` / `-inf`. Lines starting with `#` are comments.
//!
//! ```text
//! H 2 2
//! 2e0 0e0
//! 0e0 2e0
//! g 2
//! -2e0 -4e0
//! A_eq 0 2
//! b_eq 0
//!
//! A_in 0 2
//! b_in 0
//!
//! lower 2
//! -inf -inf
//! upper 2
//! inf inf
//! ```

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::{QpError, QpProblem};

pub fn write_dump(problem: &QpProblem) -> String {
    let mut out = String::from("# dcm-qp problem dump\n");
    write_matrix(&mut out, "H", &problem.hessian);
    write_vector(&mut out, "g", &problem.gradient);
    write_matrix(&mut out, "A_eq", &problem.eq_matrix);
    write_vector(&mut out, "b_eq", &problem.eq_vector);
    write_matrix(&mut out, "A_in", &problem.ineq_matrix);
    write_vector(&mut out, "b_in", &problem.ineq_vector);
    write_vector(&mut out, "lower", &problem.lower);
    write_vector(&mut out, "upper", &problem.upper);
    out
}

fn write_matrix(out: &mut String, name: &str, m: &DMatrix<f64>) {
    let _ = writeln!(out, "{name} {} {}", m.nrows(), m.ncols());
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
}

fn write_vector(out: &mut String, name: &str, v: &DVector<f64>) {
    let _ = writeln!(out, "{name} {}", v.len());
    let line: Vec<String> = v.iter().map(|x| format!("{x:e}")).collect();
    let _ = writeln!(out, "{}", line.join(" "));
}

struct Reader<'a, I: Iterator<Item = (usize, &'a str)>> {
    lines: I,
}

impl<'a, I: Iterator<Item = (usize, &'a str)>> Reader<'a, I> {
    fn line(&mut self, expect: &str) -> Result<(usize, &'a str), QpError> {
        self.lines
            .next()
            .ok_or_else(|| QpError::Parse(format!("unexpected end of input, expected {expect}")))
    }

    fn header(&mut self, name: &str, dims: usize) -> Result<Vec<usize>, QpError> {
        let (at, line) = self.line(name)?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(name) {
            return Err(QpError::Parse(format!("line {at}: expected section {name}")));
        }
        let shape: Vec<usize> = parts
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|e| QpError::Parse(format!("line {at}: {e}")))?;
        if shape.len() != dims {
            return Err(QpError::Parse(format!("line {at}: bad shape for {name}")));
        }
        Ok(shape)
    }

    fn values(&mut self, name: &str, count: usize) -> Result<Vec<f64>, QpError> {
        let (at, line) = self.line(name)?;
        let values: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|e| QpError::Parse(format!("line {at}: {e}")))?;
        if values.len() != count {
            return Err(QpError::Parse(format!(
                "line {at}: expected {count} values, found {}",
                values.len()
            )));
        }
        Ok(values)
    }

    fn matrix(&mut self, name: &str) -> Result<DMatrix<f64>, QpError> {
        let shape = self.header(name, 2)?;
        let mut data = Vec::with_capacity(shape[0] * shape[1]);
        for _ in 0..shape[0] {
            data.extend(self.values(name, shape[1])?);
        }
        Ok(DMatrix::from_row_slice(shape[0], shape[1], &data))
    }

    fn vector(&mut self, name: &str) -> Result<DVector<f64>, QpError> {
        let shape = self.header(name, 1)?;
        Ok(DVector::from_vec(self.values(name, shape[0])?))
    }
}

pub fn read_dump(text: &str) -> Result<QpProblem, QpError> {
    let mut r = Reader {
        lines: text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l))
            .filter(|(_, l)| !l.trim_start().starts_with('#')),
    };
    let problem = QpProblem {
        hessian: r.matrix("H")?,
        gradient: r.vector("g")?,
        eq_matrix: r.matrix("A_eq")?,
        eq_vector: r.vector("b_eq")?,
        ineq_matrix: r.matrix("A_in")?,
        ineq_vector: r.vector("b_in")?,
        lower: r.vector("lower")?,
        upper: r.vector("upper")?,
    };
    problem.validate()?;
    Ok(problem)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dump_round_trips_with_infinite_bounds() {
        let p = QpProblem::new(
            DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]),
            DVector::from_vec(vec![-1.0, 0.1 + 0.2]),
        )
        .with_inequalities(
            DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            DVector::from_vec(vec![1.0 / 3.0]),
        )
        .with_bounds(
            DVector::from_vec(vec![f64::NEG_INFINITY, -1.0]),
            DVector::from_vec(vec![2.0, f64::INFINITY]),
        );
        let text = write_dump(&p);
        assert_eq!(read_dump(&text).unwrap(), p);
    }

    #[test]
    fn truncated_dump_is_rejected() {
        let p = QpProblem::new(DMatrix::identity(2, 2), DVector::zeros(2));
        let text = write_dump(&p);
        let cut: String = text.lines().take(4).collect::<Vec<_>>().join("\n");
        assert!(matches!(read_dump(&cut), Err(QpError::Parse(_))));
    }
}
