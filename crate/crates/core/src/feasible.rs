//! Closed convex constraint sets `C` handled by the tangent program.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Polyhedral feasible set. Membership is checked with an absolute slack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeasibleSet {
    AllSpace,
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// `{ y : rows * y <= rhs }`
    Polyhedron { rows: Vec<Vec<f64>>, rhs: Vec<f64> },
}

impl FeasibleSet {
    pub fn new_box(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_dim(lower.len(), upper.len())?;
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u)) {
            return Err(Error::InvalidInput("box requires lower <= upper".into()));
        }
        Ok(FeasibleSet::Box { lower, upper })
    }

    /// The cube `[-radius, radius]^n`.
    pub fn cube(n: usize, radius: f64) -> Self {
        FeasibleSet::Box {
            lower: vec![-radius; n],
            upper: vec![radius; n],
        }
    }

    pub fn polyhedron(rows: Vec<Vec<f64>>, rhs: Vec<f64>) -> Result<Self> {
        check_dim(rows.len(), rhs.len())?;
        if let Some(first) = rows.first() {
            let n = first.len();
            for r in &rows {
                check_dim(n, r.len())?;
            }
        }
        Ok(FeasibleSet::Polyhedron { rows, rhs })
    }

    /// Validates the set against the problem dimension.
    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            FeasibleSet::AllSpace => Ok(()),
            FeasibleSet::Box { lower, upper } => {
                check_dim(n, lower.len())?;
                check_dim(n, upper.len())?;
                if lower.iter().zip(upper).any(|(l, u)| !(l <= u)) {
                    return Err(Error::InvalidInput("box requires lower <= upper".into()));
                }
                Ok(())
            }
            FeasibleSet::Polyhedron { rows, rhs } => {
                check_dim(rows.len(), rhs.len())?;
                for r in rows {
                    check_dim(n, r.len())?;
                }
                Ok(())
            }
        }
    }

    /// Largest constraint violation at `y` (zero when feasible).
    pub fn violation(&self, y: &[f64]) -> f64 {
        match self {
            FeasibleSet::AllSpace => 0.0,
            FeasibleSet::Box { lower, upper } => y
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(v, (l, u))| (l - v).max(v - u).max(0.0))
                .fold(0.0, f64::max),
            FeasibleSet::Polyhedron { rows, rhs } => rows
                .iter()
                .zip(rhs)
                .map(|(r, b)| (dot(r, y) - b).max(0.0))
                .fold(0.0, f64::max),
        }
    }

    pub fn contains(&self, y: &[f64], tol: f64) -> bool {
        self.violation(y) <= tol
    }

    /// Inequality rows `a^T y <= b` describing the set; boxes expand to `2n` rows
    /// with infinite sides dropped.
    pub fn inequality_rows(&self, n: usize) -> Vec<(Vec<f64>, f64)> {
        match self {
            FeasibleSet::AllSpace => Vec::new(),
            FeasibleSet::Box { lower, upper } => {
                let mut out = Vec::new();
                for j in 0..n {
                    if upper[j].is_finite() {
                        let mut r = vec![0.0; n];
                        r[j] = 1.0;
                        out.push((r, upper[j]));
                    }
                    if lower[j].is_finite() {
                        let mut r = vec![0.0; n];
                        r[j] = -1.0;
                        out.push((r, -lower[j]));
                    }
                }
                out
            }
            FeasibleSet::Polyhedron { rows, rhs } => {
                rows.iter().cloned().zip(rhs.iter().copied()).collect()
            }
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_rejects_inverted_bounds() {
        assert!(FeasibleSet::new_box(vec![1.0], vec![0.0]).is_err());
        assert!(FeasibleSet::new_box(vec![0.0, 0.0], vec![1.0]).is_err());
    }

    #[test]
    fn box_membership() {
        let c = FeasibleSet::cube(2, 1.0);
        assert!(c.contains(&[1.0, -1.0], 0.0));
        assert!(!c.contains(&[1.0 + 1e-9, 0.0], 1e-12));
        assert!((c.violation(&[0.0, -3.0]) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn polyhedron_rows_roundtrip() {
        // -t <= d <= t
        let c = FeasibleSet::polyhedron(
            vec![vec![-1.0, 1.0], vec![-1.0, -1.0]],
            vec![0.0, 0.0],
        )
        .unwrap();
        assert!(c.contains(&[1.0, 0.5], 0.0));
        assert!(!c.contains(&[0.2, 0.5], 1e-12));
        assert_eq!(c.inequality_rows(2).len(), 2);
    }

    #[test]
    fn half_infinite_box_drops_rows() {
        let c = FeasibleSet::new_box(vec![0.0, f64::NEG_INFINITY], vec![f64::INFINITY, 1.0]).unwrap();
        assert_eq!(c.inequality_rows(2).len(), 2);
    }
}
