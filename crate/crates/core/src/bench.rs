//! Built-in test problems: the nonsmooth counterexample to Cauchy-point
//! trust-region steps, polyhedral convex functions, and random LFT plants.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::control::{spectral_abscissa_value, LftPlant};
use crate::error::{Error, Result};
use crate::oracle::{AffinePiece, MaxAffine};

/// Level of the flat piece.
pub const DRAGON_FLOOR: f64 = -100.0;

/// `max{-100, 2x1 + 3x2, -2x1 + 3x2, 5x1 + 2x2, -5x1 + 2x2}`, pieces in that
/// order.
pub fn dragon_function() -> MaxAffine {
    MaxAffine::new(vec![
        AffinePiece::new(DRAGON_FLOOR, vec![0.0, 0.0]),
        AffinePiece::new(0.0, vec![2.0, 3.0]),
        AffinePiece::new(0.0, vec![-2.0, 3.0]),
        AffinePiece::new(0.0, vec![5.0, 2.0]),
        AffinePiece::new(0.0, vec![-5.0, 2.0]),
    ])
    .expect("nonempty")
}

pub fn dragon_f(x: &[f64]) -> f64 {
    dragon_function().eval(x)
}

/// The point `(x1, a/3 - 2 x1 / 3)` on the upper-right edge of `[f = a]`.
pub fn dragon_start(a: f64, x1: f64) -> Vec<f64> {
    vec![x1, a / 3.0 - 2.0 * x1 / 3.0]
}

/// Vertices of the level polygon `[f = a]` in the upper half-plane, left to right.
pub fn dragon_polygon(a: f64) -> [[f64; 2]; 5] {
    [
        [-a / 5.0, 0.0],
        [-a / 11.0, 3.0 * a / 11.0],
        [0.0, a / 3.0],
        [a / 11.0, 3.0 * a / 11.0],
        [a / 5.0, 0.0],
    ]
}

/// Breakpoints along the steepest-descent ray `x + r (-2, -3)` from
/// [`dragon_start`]: `A` on the vertical axis, `B` on the line `x2 = -3 x1`,
/// and the largest `r` still accepted at threshold `gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DragonQuantities {
    pub r_a: f64,
    pub r_b: f64,
    pub r_gamma: f64,
    pub f_a: f64,
    pub f_b: f64,
}

pub fn dragon_quantities(a: f64, x1: f64, gamma: f64) -> Result<DragonQuantities> {
    if !(x1 > 0.0 && x1 <= a / 11.0) {
        return Err(Error::InvalidInput("need 0 < x1 <= a/11".into()));
    }
    if !(gamma > 5.0 / 13.0 && gamma < 1.0) {
        return Err(Error::InvalidInput("need 5/13 < gamma < 1".into()));
    }
    Ok(DragonQuantities {
        r_a: x1 / 2.0,
        r_b: 7.0 * x1 / 27.0 + a / 27.0,
        r_gamma: 4.0 * x1 / (13.0 * gamma - 5.0),
        f_a: a - 13.0 * x1 / 2.0,
        f_b: -143.0 * x1 / 27.0 + 22.0 * a / 27.0,
    })
}

/// Ratio of actual to predicted decrease at `x + r (-2, -3)`.
pub fn dragon_rho(a: f64, x1: f64, r: f64) -> f64 {
    let r_a = x1 / 2.0;
    let r_b = 7.0 * x1 / 27.0 + a / 27.0;
    if r <= r_a {
        1.0
    } else if r <= r_b {
        (4.0 * x1 + 5.0 * r) / (13.0 * r)
    } else {
        (a - 12.0 * r + 19.0 * x1) / (39.0 * r)
    }
}

/// `sum_i w_i |x_i|`.
pub fn weighted_l1(weights: &[f64]) -> MaxAffine {
    MaxAffine::weighted_l1(weights)
}

/// Random max-affine function with `pieces` pieces in dimension `n`, plus a
/// coercive `|.|_1` term so it is bounded below.
pub fn random_polyhedral(n: usize, pieces: usize, seed: u64) -> MaxAffine {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let base: Vec<(f64, Vec<f64>)> = (0..pieces)
        .map(|_| {
            let off = rng.random_range(-1.0..1.0);
            let slope = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            (off, slope)
        })
        .collect();
    // max_i p_i(x) + |x|_1 = max over (i, sign pattern)
    for (off, slope) in &base {
        for mask in 0..1usize << n {
            let s = slope
                .iter()
                .enumerate()
                .map(|(j, g)| g + if mask >> j & 1 == 0 { 1.0 } else { -1.0 })
                .collect();
            out.push(AffinePiece::new(*off, s));
        }
    }
    MaxAffine::new(out).expect("nonempty")
}

fn normal_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
}

/// Random plant with `m` scalar uncertainties and `n` states, shifted so the
/// nominal spectral abscissa is at most `-0.5`. `affine` forces `Dqp = 0`.
/// Includes a one-input one-output performance channel.
pub fn random_lft_instance(m: usize, n: usize, seed: u64, affine: bool) -> Result<LftPlant> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidInput("need m, n >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = normal_matrix(&mut rng, n, n, 1.0 / (n as f64).sqrt());
    let alpha = spectral_abscissa_value(&a)?;
    if alpha > -0.5 {
        a -= DMatrix::identity(n, n) * (alpha + 0.5 + rng.random_range(0.0..0.5));
    }
    let bp = normal_matrix(&mut rng, n, m, 0.5);
    let cq = normal_matrix(&mut rng, m, n, 0.5);
    let dqp = if affine {
        DMatrix::zeros(m, m)
    } else {
        normal_matrix(&mut rng, m, m, 0.2)
    };
    let bw = normal_matrix(&mut rng, n, 1, 1.0);
    let dqw = normal_matrix(&mut rng, m, 1, 0.1);
    let cz = normal_matrix(&mut rng, 1, n, 1.0);
    let dzp = normal_matrix(&mut rng, 1, m, 0.1);
    let dzw = DMatrix::zeros(1, 1);
    LftPlant::new(a, bp, bw, cq, dqp, dqw, cz, dzp, dzw, vec![1; m])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn dragon_values() {
        assert_eq!(dragon_f(&[0.0, 11.0 / 3.0]), 11.0);
        assert_eq!(dragon_f(&[0.0, 0.0]), 0.0);
        assert_eq!(dragon_f(&[0.0, -60.0]), -100.0);
        for v in dragon_polygon(11.0) {
            assert_abs_diff_eq!(dragon_f(&v), 11.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn quantities_against_direct_evaluation() {
        let (a, x1) = (11.0, 1.0);
        let q = dragon_quantities(a, x1, 0.9).unwrap();
        assert_eq!(q.r_a, 0.5);
        assert_abs_diff_eq!(q.r_b, 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q.r_gamma, 4.0 / 6.7, epsilon = 1e-12);
        let x = dragon_start(a, x1);
        let ray = |r: f64| [x[0] - 2.0 * r, x[1] - 3.0 * r];
        assert_abs_diff_eq!(q.f_a, dragon_f(&ray(q.r_a)), epsilon = 1e-12);
        assert_abs_diff_eq!(q.f_b, dragon_f(&ray(q.r_b)), epsilon = 1e-12);
        // A on the vertical axis, B on x2 = -3 x1
        assert_abs_diff_eq!(ray(q.r_a)[0], 0.0, epsilon = 1e-15);
        let b = ray(q.r_b);
        assert_abs_diff_eq!(b[1], -3.0 * b[0], epsilon = 1e-12);
        assert!(dragon_quantities(a, x1, 0.3).is_err());
    }

    #[test]
    fn rho_branches_are_continuous() {
        let (a, x1) = (11.0, 1.0);
        assert_eq!(dragon_rho(a, x1, 0.25), 1.0);
        let rb = 2.0 / 3.0;
        let mid = (4.0 * x1 + 5.0 * rb) / (13.0 * rb);
        let last = (a - 12.0 * rb + 19.0 * x1) / (39.0 * rb);
        assert_abs_diff_eq!(mid, 11.0 / 13.0, epsilon = 1e-14);
        assert_abs_diff_eq!(last, 11.0 / 13.0, epsilon = 1e-14);
        assert_abs_diff_eq!(dragon_rho(a, x1, 0.5), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(dragon_rho(a, x1, 1.0), 18.0 / 39.0, epsilon = 1e-15);
    }

    #[test]
    fn rho_matches_function_along_ray() {
        let (a, x1) = (11.0, 0.37);
        let x = dragon_start(a, x1);
        for r in [0.05, 0.2, 0.4, 0.7, 1.5, 3.0] {
            let y = [x[0] - 2.0 * r, x[1] - 3.0 * r];
            let direct = (a - dragon_f(&y)) / (13.0 * r);
            assert_abs_diff_eq!(dragon_rho(a, x1, r), direct, epsilon = 1e-12);
        }
    }

    #[test]
    fn dragon_is_convex() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let p: Vec<[f64; 2]> = (0..3)
                .map(|_| [rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0)])
                .collect();
            let w: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..1.0)).collect();
            let s: f64 = w.iter().sum();
            let c = [
                (0..3).map(|i| w[i] * p[i][0]).sum::<f64>() / s,
                (0..3).map(|i| w[i] * p[i][1]).sum::<f64>() / s,
            ];
            let rhs: f64 = (0..3).map(|i| w[i] * dragon_f(&p[i])).sum::<f64>() / s;
            assert!(dragon_f(&c) <= rhs + 1e-9);
        }
    }

    #[test]
    fn random_plants() {
        let p = random_lft_instance(2, 5, 42, true).unwrap();
        assert_eq!(p, random_lft_instance(2, 5, 42, true).unwrap());
        assert!(spectral_abscissa_value(&p.a).unwrap() <= -0.5 + 1e-12);
        assert_eq!(p.dqp, DMatrix::zeros(2, 2));
        let a0 = p.closed_loop_a(&[0.0, 0.0]).unwrap();
        let a1 = p.closed_loop_a(&[0.5, -0.25]).unwrap();
        let a2 = p.closed_loop_a(&[1.0, -0.5]).unwrap();
        assert!((&a2 - &a0 - (&a1 - &a0) * 2.0).norm() < 1e-12);
    }
}
