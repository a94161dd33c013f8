//! First-order models `phi(y, x)` of the objective and their cutting planes.
//!
//! Every model is convex in `y`, agrees with `f` at `y = x`, and produces
//! affine minorants `(a, g)` of `phi(., x)` that are tangent at a trial point.

use std::sync::Arc;

use crate::bundle::{CuttingPlane, PlaneOrigin};
use crate::error::{check_dim, Error, Result};
use crate::feasible::dot;
use crate::oracle::{MaxAffine, Oracle, SmoothMap};

#[derive(Clone)]
pub enum Model {
    /// `phi(y, x) = f(x) + f°(x, y - x)`.
    Standard(Arc<dyn Oracle>),
    /// A convex `f` used as its own model: `phi(y, x) = f(y)`.
    ConvexSelf(Arc<dyn Oracle>),
    /// Composite `f = h o F`: `phi(y, x) = h(F(x) + F'(x)(y - x))`.
    Natural {
        outer: MaxAffine,
        inner: Arc<dyn SmoothMap>,
    },
    /// `f = s + h` with smooth `s` (scalar map) and convex polyhedral `h`:
    /// `phi(y, x) = s(x) + grad s(x)^T (y - x) + h(y)`.
    Splitting {
        smooth: Arc<dyn SmoothMap>,
        convex: MaxAffine,
    },
    /// Variables `(t, delta)`; `f = t + weight * max(0, f_inner(delta))` with
    /// model `t' + weight * max(0, phi_inner(delta', delta))`.
    PenaltyMax { inner: Box<Model>, weight: f64 },
}

impl std::fmt::Debug for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Penalty objective `t + c * max(0, inner)`.
pub fn penalty_eval(t: f64, inner_value: f64, c: f64) -> f64 {
    t + c * inner_value.max(0.0)
}

fn argmax_dir(grads: &[Vec<f64>], d: &[f64]) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, g) in grads.iter().enumerate() {
        let v = dot(g, d);
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    best
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::Standard(_) => "standard",
            Model::ConvexSelf(_) => "convex_self",
            Model::Natural { .. } => "natural",
            Model::Splitting { .. } => "splitting",
            Model::PenaltyMax { .. } => "penalty_max",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Model::Standard(o) | Model::ConvexSelf(o) => o.dim(),
            Model::Natural { inner, .. } => inner.dim_in(),
            Model::Splitting { smooth, .. } => smooth.dim_in(),
            Model::PenaltyMax { inner, .. } => inner.dim() + 1,
        }
    }

    /// Whether every cutting plane is a global minorant of `f`, which makes
    /// re-anchoring planes at the next serious iterate legitimate.
    pub fn planes_are_global_minorants(&self) -> bool {
        matches!(self, Model::ConvexSelf(_))
    }

    /// The objective `f(x)`.
    pub fn objective(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        match self {
            Model::Standard(o) | Model::ConvexSelf(o) => o.value(x),
            Model::Natural { outer, inner } => Ok(outer.eval(&inner.eval(x)?)),
            Model::Splitting { smooth, convex } => Ok(scalar(smooth.eval(x)?)? + convex.eval(x)),
            Model::PenaltyMax { inner, weight } => {
                Ok(penalty_eval(x[0], inner.objective(&x[1..])?, *weight))
            }
        }
    }

    /// The ideal model value `phi(y, x)`.
    pub fn eval(&self, y: &[f64], x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        check_dim(self.dim(), y.len())?;
        match self {
            Model::Standard(o) => Ok(o.value(x)? + o.dir_deriv(x, &sub(y, x))?),
            Model::ConvexSelf(o) => o.value(y),
            Model::Natural { outer, inner } => Ok(outer.eval(&linearize(inner.as_ref(), x, y)?)),
            Model::Splitting { smooth, convex } => {
                let s = scalar(smooth.eval(x)?)?;
                let grad = smooth.jacobian(x)?.swap_remove(0);
                Ok(s + dot(&grad, &sub(y, x)) + convex.eval(y))
            }
            Model::PenaltyMax { inner, weight } => {
                Ok(penalty_eval(y[0], inner.eval(&y[1..], &x[1..])?, *weight))
            }
        }
    }

    /// Cutting plane of `phi(., x)` at the trial point `z`, as `(a, g)` with
    /// `a = phi(z, x) + g^T (x - z)`.
    pub fn cut_pair(&self, x: &[f64], z: &[f64]) -> Result<(f64, Vec<f64>)> {
        check_dim(self.dim(), x.len())?;
        check_dim(self.dim(), z.len())?;
        match self {
            Model::Standard(o) => {
                let grads = o.active_gradients(x)?;
                if grads.is_empty() {
                    return Err(Error::Oracle("empty subdifferential".into()));
                }
                let i = argmax_dir(&grads, &sub(z, x));
                Ok((o.value(x)?, grads[i].clone()))
            }
            Model::ConvexSelf(o) => {
                let g = o.subgradient(z)?;
                let a = o.value(z)? + dot(&g, &sub(x, z));
                Ok((a, g))
            }
            Model::Natural { outer, inner } => {
                let w = linearize(inner.as_ref(), x, z)?;
                let piece = &outer.pieces()[outer.first_active(&w)];
                let jac = inner.jacobian(x)?;
                let g = transpose_times(&jac, &piece.slope, x.len());
                let a = piece.eval(&w) + dot(&g, &sub(x, z));
                Ok((a, g))
            }
            Model::Splitting { smooth, convex } => {
                let s = scalar(smooth.eval(x)?)?;
                let mut g = smooth.jacobian(x)?.swap_remove(0);
                let piece = &convex.pieces()[convex.first_active(z)];
                let phi_z = s + dot(&g, &sub(z, x)) + piece.eval(z);
                for (gi, si) in g.iter_mut().zip(&piece.slope) {
                    *gi += si;
                }
                let a = phi_z + dot(&g, &sub(x, z));
                Ok((a, g))
            }
            Model::PenaltyMax { inner, weight } => {
                let (dx, dz) = (&x[1..], &z[1..]);
                let mut g = vec![0.0; x.len()];
                g[0] = 1.0;
                if inner.eval(dz, dx)? > 0.0 {
                    let (a_in, g_in) = inner.cut_pair(dx, dz)?;
                    for (gi, v) in g[1..].iter_mut().zip(&g_in) {
                        *gi = weight * v;
                    }
                    Ok((x[0] + weight * a_in, g))
                } else {
                    Ok((x[0], g))
                }
            }
        }
    }

    /// Cutting plane tagged with its origin: an exactness plane when `z == x`.
    pub fn cut(&self, x: &[f64], z: &[f64], birth: usize) -> Result<CuttingPlane> {
        let (a, g) = self.cut_pair(x, z)?;
        let origin = if x == z {
            PlaneOrigin::Exactness
        } else {
            PlaneOrigin::NullStep(z.to_vec())
        };
        Ok(CuttingPlane::new(a, g, origin, birth))
    }
}

fn scalar(v: Vec<f64>) -> Result<f64> {
    match v.as_slice() {
        [s] => Ok(*s),
        _ => Err(Error::DimensionMismatch {
            expected: 1,
            got: v.len(),
        }),
    }
}

/// `F(x) + F'(x)(y - x)`.
fn linearize(map: &dyn SmoothMap, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let fx = map.eval(x)?;
    let jac = map.jacobian(x)?;
    let d = sub(y, x);
    Ok(fx
        .iter()
        .zip(&jac)
        .map(|(f, row)| f + dot(row, &d))
        .collect())
}

fn transpose_times(jac: &[Vec<f64>], s: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (row, si) in jac.iter().zip(s) {
        for (o, r) in out.iter_mut().zip(row) {
            *o += si * r;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::dragon_function;
    use crate::oracle::{AffinePiece, FnMap};

    fn abs_model_standard() -> Model {
        Model::Standard(Arc::new(MaxAffine::weighted_l1(&[1.0])))
    }

    fn square_map() -> Arc<dyn SmoothMap> {
        Arc::new(FnMap {
            n: 1,
            p: 1,
            f: |x: &[f64]| vec![x[0] * x[0]],
            jac: |x: &[f64]| vec![vec![2.0 * x[0]]],
        })
    }

    fn abs_outer() -> MaxAffine {
        MaxAffine::new(vec![
            AffinePiece::new(0.0, vec![1.0]),
            AffinePiece::new(0.0, vec![-1.0]),
        ])
        .unwrap()
    }

    #[test]
    fn standard_model_of_abs() {
        let m = abs_model_standard();
        for y in [-2.0, -0.1, 0.0, 0.7] {
            assert_eq!(m.eval(&[y], &[0.0]).unwrap(), f64::abs(y));
        }
    }

    #[test]
    fn standard_model_of_dragon_along_ray() {
        let m = Model::Standard(Arc::new(dragon_function()));
        let x = [1.0, 3.0];
        // y in the cone where (2,3) attains the directional derivative
        for y in [[0.0, 0.0], [0.5, 2.25], [-1.0, 0.0], [1.0, 4.0]] {
            let v = m.eval(&y, &x).unwrap();
            assert!((v - (2.0 * y[0] + 3.0 * y[1])).abs() < 1e-12, "{y:?}");
        }
    }

    #[test]
    fn natural_model_value() {
        let m = Model::Natural {
            outer: abs_outer(),
            inner: square_map(),
        };
        assert!((m.eval(&[1.2], &[1.0]).unwrap() - 1.4).abs() < 1e-14);
        assert_eq!(m.objective(&[-1.5]).unwrap(), 2.25);
    }

    #[test]
    fn standard_cut_dragon() {
        let m = Model::Standard(Arc::new(dragon_function()));
        let (a, g) = m.cut_pair(&[1.0, 3.0], &[-1.0, 3.0]).unwrap();
        assert_eq!(a, 11.0);
        assert_eq!(g, vec![2.0, 3.0]);
    }

    #[test]
    fn standard_cut_abs_sign_selection() {
        let m = abs_model_standard();
        let (a, g) = m.cut_pair(&[0.0], &[1.0]).unwrap();
        assert_eq!((a, g), (0.0, vec![1.0]));
        let (_, g) = m.cut_pair(&[0.0], &[-1.0]).unwrap();
        assert_eq!(g, vec![-1.0]);
    }

    #[test]
    fn convex_self_cut_reanchored() {
        let m = Model::ConvexSelf(Arc::new(MaxAffine::weighted_l1(&[1.0])));
        let p = m.cut(&[1.0], &[-2.0], 1).unwrap();
        assert_eq!((p.a, p.g.clone()), (-1.0, vec![-1.0]));
        assert!(!p.is_exactness());
        assert!(m.cut(&[1.0], &[1.0], 0).unwrap().is_exactness());
    }

    #[test]
    fn penalty_values() {
        assert_eq!(penalty_eval(2.0, -0.3, 10.0), 2.0);
        assert!((penalty_eval(2.0, 0.3, 10.0) - 5.0).abs() < 1e-15);
        assert_eq!(penalty_eval(2.0, 0.0, 10.0), 2.0);
    }

    #[test]
    fn penalty_boundary_zero_in_subdifferential() {
        // inner f(d) = 1 - d, zero at d = 1
        let inner = MaxAffine::new(vec![AffinePiece::new(1.0, vec![-1.0])]).unwrap();
        let m = Model::PenaltyMax {
            inner: Box::new(Model::Standard(Arc::new(inner))),
            weight: 10.0,
        };
        let x = [1.0, 1.0];
        assert_eq!(m.objective(&x).unwrap(), 1.0);
        // exactness plane on the boundary ignores the max term
        let (a, g) = m.cut_pair(&x, &x).unwrap();
        assert_eq!((a, g), (1.0, vec![1.0, 0.0]));
        // a trial point inside the penalised region gets the steep plane
        let (a, g) = m.cut_pair(&x, &[0.5, 0.5]).unwrap();
        assert_eq!((a, g), (1.0, vec![1.0, -10.0]));
    }

    #[test]
    fn splitting_model_cut_tangent() {
        // s(x) = x^2, h = |x|
        let m = Model::Splitting {
            smooth: square_map(),
            convex: abs_outer(),
        };
        let x = [1.0];
        let z = [-0.5];
        let p = m.cut(&x, &z, 1).unwrap();
        let phi_z = m.eval(&z, &x).unwrap();
        assert!((p.eval(&z, &x).unwrap() - phi_z).abs() < 1e-14);
        assert_eq!(m.eval(&x, &x).unwrap(), m.objective(&x).unwrap());
    }
}
