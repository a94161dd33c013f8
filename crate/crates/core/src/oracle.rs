//! First-order oracles: function values, Clarke subgradients and directional
//! derivatives of locally Lipschitz objectives.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::feasible::dot;

/// Piece `i` of a max-type function counts as active at `x` when
/// `f_i(x) >= f(x) - ACTIVE_RTOL * (1 + |f(x)|)`.
pub const ACTIVE_RTOL: f64 = 1e-10;

pub(crate) fn active_threshold(fx: f64) -> f64 {
    fx - ACTIVE_RTOL * (1.0 + fx.abs())
}

/// Value and subgradient access to a locally Lipschitz `f : R^n -> R`.
///
/// Implementations must be pure so that they can be shared across threads.
pub trait Oracle: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> Result<f64>;

    /// Generators of the Clarke subdifferential at `x`, in a deterministic
    /// order. For a max-type function these are the gradients of the active
    /// pieces. Never empty.
    fn active_gradients(&self, x: &[f64]) -> Result<Vec<Vec<f64>>>;

    /// One Clarke subgradient; the first active gradient by default.
    fn subgradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.active_gradients(x)?
            .into_iter()
            .next()
            .ok_or_else(|| Error::Oracle("empty subdifferential".into()))
    }

    /// Clarke directional derivative `f°(x, d) = max_{g} g^T d`.
    fn dir_deriv(&self, x: &[f64], d: &[f64]) -> Result<f64> {
        check_dim(self.dim(), d.len())?;
        Ok(self
            .active_gradients(x)?
            .iter()
            .map(|g| dot(g, d))
            .fold(f64::NEG_INFINITY, f64::max))
    }
}

/// A smooth map `F : R^n -> R^p` with its Jacobian (row-major, `p x n`).
pub trait SmoothMap: Send + Sync {
    fn dim_in(&self) -> usize;
    fn dim_out(&self) -> usize;
    fn eval(&self, x: &[f64]) -> Result<Vec<f64>>;
    fn jacobian(&self, x: &[f64]) -> Result<Vec<Vec<f64>>>;
}

/// One affine piece `offset + slope^T x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffinePiece {
    pub offset: f64,
    pub slope: Vec<f64>,
}

impl AffinePiece {
    pub fn new(offset: f64, slope: Vec<f64>) -> Self {
        Self { offset, slope }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.offset + dot(&self.slope, x)
    }
}

/// Convex polyhedral function `max_i offset_i + slope_i^T x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxAffine {
    pieces: Vec<AffinePiece>,
}

impl MaxAffine {
    pub fn new(pieces: Vec<AffinePiece>) -> Result<Self> {
        let first = pieces
            .first()
            .ok_or_else(|| Error::InvalidInput("max-affine function needs a piece".into()))?;
        let n = first.slope.len();
        for p in &pieces {
            check_dim(n, p.slope.len())?;
        }
        Ok(Self { pieces })
    }

    /// `sum_i w_i |x_i|`, written as the maximum over all sign patterns.
    pub fn weighted_l1(weights: &[f64]) -> Self {
        let n = weights.len();
        let pieces = (0..1usize << n)
            .map(|mask| {
                let slope = (0..n)
                    .map(|i| if mask >> i & 1 == 0 { weights[i] } else { -weights[i] })
                    .collect();
                AffinePiece::new(0.0, slope)
            })
            .collect();
        Self { pieces }
    }

    pub fn pieces(&self) -> &[AffinePiece] {
        &self.pieces
    }

    pub fn dim(&self) -> usize {
        self.pieces[0].slope.len()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.eval(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Indices of active pieces, ascending.
    pub fn active_indices(&self, x: &[f64]) -> Vec<usize> {
        let fx = self.eval(x);
        let thr = active_threshold(fx);
        (0..self.pieces.len())
            .filter(|&i| self.pieces[i].eval(x) >= thr)
            .collect()
    }

    /// Lowest-index active piece.
    pub fn first_active(&self, x: &[f64]) -> usize {
        self.active_indices(x)[0]
    }
}

impl Oracle for MaxAffine {
    fn dim(&self) -> usize {
        MaxAffine::dim(self)
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self.eval(x))
    }

    fn active_gradients(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        check_dim(self.dim(), x.len())?;
        Ok(self
            .active_indices(x)
            .into_iter()
            .map(|i| self.pieces[i].slope.clone())
            .collect())
    }
}

/// A smooth scalar piece used inside [`MaxOfSmooth`].
pub trait SmoothPiece: Send + Sync {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
}

/// Quadratic `0.5 x^T Q x + c^T x + r`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    pub q: Vec<Vec<f64>>,
    pub c: Vec<f64>,
    pub r: f64,
}

impl SmoothPiece for Quadratic {
    fn value(&self, x: &[f64]) -> f64 {
        let qx: f64 = self
            .q
            .iter()
            .zip(x)
            .map(|(row, xi)| xi * dot(row, x))
            .sum();
        0.5 * qx + dot(&self.c, x) + self.r
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.q
            .iter()
            .zip(&self.c)
            .map(|(row, ci)| dot(row, x) + ci)
            .collect()
    }
}

/// `max_i f_i(x)` for smooth pieces `f_i`.
#[derive(Clone)]
pub struct MaxOfSmooth {
    dim: usize,
    pieces: Vec<Arc<dyn SmoothPiece>>,
}

impl MaxOfSmooth {
    pub fn new(dim: usize, pieces: Vec<Arc<dyn SmoothPiece>>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidInput("max of zero pieces".into()));
        }
        Ok(Self { dim, pieces })
    }
}

impl Oracle for MaxOfSmooth {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        Ok(self
            .pieces
            .iter()
            .map(|p| p.value(x))
            .fold(f64::NEG_INFINITY, f64::max))
    }

    fn active_gradients(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        let vals: Vec<f64> = self.pieces.iter().map(|p| p.value(x)).collect();
        let fx = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let thr = active_threshold(fx);
        Ok(self
            .pieces
            .iter()
            .zip(&vals)
            .filter(|(_, &v)| v >= thr)
            .map(|(p, _)| p.gradient(x))
            .collect())
    }
}

/// Affine map `F(x) = M x + b`, mainly for composite tests.
#[derive(Debug, Clone)]
pub struct AffineMap {
    pub matrix: Vec<Vec<f64>>,
    pub shift: Vec<f64>,
}

impl SmoothMap for AffineMap {
    fn dim_in(&self) -> usize {
        self.matrix.first().map_or(0, |r| r.len())
    }
    fn dim_out(&self) -> usize {
        self.matrix.len()
    }
    fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim_in(), x.len())?;
        Ok(self
            .matrix
            .iter()
            .zip(&self.shift)
            .map(|(r, b)| dot(r, x) + b)
            .collect())
    }
    fn jacobian(&self, _x: &[f64]) -> Result<Vec<Vec<f64>>> {
        Ok(self.matrix.clone())
    }
}

/// Componentwise map given by closures; handy for examples and tests.
pub struct FnMap<F, J>
where
    F: Fn(&[f64]) -> Vec<f64> + Send + Sync,
    J: Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync,
{
    pub n: usize,
    pub p: usize,
    pub f: F,
    pub jac: J,
}

impl<F, J> SmoothMap for FnMap<F, J>
where
    F: Fn(&[f64]) -> Vec<f64> + Send + Sync,
    J: Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync,
{
    fn dim_in(&self) -> usize {
        self.n
    }
    fn dim_out(&self) -> usize {
        self.p
    }
    fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.n, x.len())?;
        Ok((self.f)(x))
    }
    fn jacobian(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        check_dim(self.n, x.len())?;
        Ok((self.jac)(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abs1() -> MaxAffine {
        MaxAffine::weighted_l1(&[1.0])
    }

    #[test]
    fn abs_dir_deriv_at_kink() {
        let f = abs1();
        assert_eq!(f.dir_deriv(&[0.0], &[2.0]).unwrap(), 2.0);
        assert_eq!(f.dir_deriv(&[0.0], &[-3.0]).unwrap(), 3.0);
        assert_eq!(f.active_gradients(&[0.0]).unwrap().len(), 2);
        assert_eq!(f.active_gradients(&[0.5]).unwrap(), vec![vec![1.0]]);
    }

    #[test]
    fn weighted_l1_values() {
        let f = MaxAffine::weighted_l1(&[1.0, 2.0]);
        assert_eq!(f.pieces().len(), 4);
        assert_eq!(f.eval(&[1.5, -1.0]), 3.5);
        assert_eq!(f.eval(&[0.0, 0.0]), 0.0);
    }

    #[test]
    fn activity_tolerance_is_relative() {
        let f = MaxAffine::new(vec![
            AffinePiece::new(1e6, vec![1.0]),
            AffinePiece::new(1e6 - 1e-6, vec![-1.0]),
        ])
        .unwrap();
        // gap 1e-6 < 1e-10 * (1 + 1e6) = 1.0000001e-4
        assert_eq!(f.active_indices(&[0.0]), vec![0, 1]);
        let g = MaxAffine::new(vec![
            AffinePiece::new(1.0, vec![1.0]),
            AffinePiece::new(1.0 - 1e-6, vec![-1.0]),
        ])
        .unwrap();
        assert_eq!(g.active_indices(&[0.0]), vec![0]);
    }

    #[test]
    fn subgradient_in_hull_of_active() {
        let f = MaxAffine::weighted_l1(&[1.0, 2.0]);
        let x = [0.0, 0.3];
        let act = f.active_gradients(&x).unwrap();
        let g = f.subgradient(&x).unwrap();
        assert!(act.contains(&g));
    }

    #[test]
    fn max_of_smooth_quadratics() {
        let q1: Arc<dyn SmoothPiece> = Arc::new(Quadratic {
            q: vec![vec![2.0]],
            c: vec![0.0],
            r: 0.0,
        });
        let q2: Arc<dyn SmoothPiece> = Arc::new(Quadratic {
            q: vec![vec![0.0]],
            c: vec![1.0],
            r: 0.0,
        });
        let f = MaxOfSmooth::new(1, vec![q1, q2]).unwrap();
        // x^2 vs x meet at 0 and 1
        assert_eq!(f.value(&[2.0]).unwrap(), 4.0);
        assert_eq!(f.active_gradients(&[1.0]).unwrap().len(), 2);
        assert_eq!(f.dir_deriv(&[1.0], &[1.0]).unwrap(), 2.0);
        assert_eq!(f.dir_deriv(&[1.0], &[-1.0]).unwrap(), -1.0);
    }
}
