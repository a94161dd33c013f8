//! The trust-region tangent program
//!
//! ```text
//! min phi_k(y, x)   s.t.   y in C,  ||y - x|| <= R
//! ```
//!
//! solved as an epigraph LP for the polyhedral norms, or in closed form for a
//! single plane and the Euclidean norm. Also home of the trial-step rule.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bundle::Bundle;
use crate::config::{Norm, SolverConfig, TrialMode};
use crate::error::{check_dim, Error, Result};
use crate::feasible::{dot, FeasibleSet};
use crate::lp::LinearProgram;

#[derive(Debug, Clone, PartialEq)]
pub struct TangentSolution {
    pub y_star: Vec<f64>,
    /// `phi_k(y_star, x)`.
    pub model_value: f64,
    /// Simplex weights over the bundle planes.
    pub multipliers: Vec<f64>,
    /// `sum_i lambda_i g_i`.
    pub g_agg: Vec<f64>,
    /// `g_agg` plus the normal vector contributed by binding constraints of
    /// `C`; vanishes at a critical point of `f + i_C` as `R -> 0`.
    pub g_reduced: Vec<f64>,
    pub active_planes: Vec<usize>,
    /// The trust-region constraint is binding at `y_star`.
    pub tr_active: bool,
    pub duality_gap: f64,
}

/// Dispatches on the norm: LP for `Inf`/`L1`, closed form for `L2`.
pub fn solve_tangent(b: &Bundle, c: &FeasibleSet, radius: f64, norm: Norm) -> Result<TangentSolution> {
    match norm {
        Norm::Inf | Norm::L1 => solve_tangent_lp(b, c, radius, norm),
        Norm::L2 => {
            if b.len() != 1 || !matches!(c, FeasibleSet::AllSpace) {
                return Err(Error::Unsupported(
                    "euclidean tangent program needs a single plane and no constraints".into(),
                ));
            }
            let p = &b.planes()[0];
            solve_tangent_euclid_single(p.a, &p.g, b.anchor(), radius)
        }
    }
}

/// Steepest descent on a single plane: `y = x - R g / ||g||_2`.
pub fn solve_tangent_euclid_single(a: f64, g: &[f64], x: &[f64], radius: f64) -> Result<TangentSolution> {
    check_dim(x.len(), g.len())?;
    if !(radius > 0.0) {
        return Err(Error::InvalidInput("trust-region radius must be positive".into()));
    }
    let gn = dot(g, g).sqrt();
    if gn == 0.0 {
        return Err(Error::ZeroGradient);
    }
    let y_star = x.iter().zip(g).map(|(x, g)| x - radius * g / gn).collect();
    Ok(TangentSolution {
        y_star,
        model_value: a - radius * gn,
        multipliers: vec![1.0],
        g_agg: g.to_vec(),
        g_reduced: g.to_vec(),
        active_planes: vec![0],
        tr_active: true,
        duality_gap: 0.0,
    })
}

/// Epigraph LP over `y = x + d+ - d-` and the level `t`:
/// `min t  s.t.  a_i + g_i^T d <= t,  x + d in C,  ||d|| <= R`,
/// followed by a least-motion pass `min ||d||_1` at the optimal level so
/// coordinates the model does not care about stay at `x`.
pub fn solve_tangent_lp(b: &Bundle, c: &FeasibleSet, radius: f64, norm: Norm) -> Result<TangentSolution> {
    if norm == Norm::L2 {
        return Err(Error::Unsupported("euclidean norm is not polyhedral".into()));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidInput("trust-region radius must be positive".into()));
    }
    let x = b.anchor();
    let n = x.len();
    let nv = 2 * n + 1;
    let planes = b.planes();
    let c_rows = c.inequality_rows(n);

    let mut lower = vec![0.0; nv];
    let mut upper = vec![radius; nv];
    lower[2 * n] = f64::NEG_INFINITY;
    upper[2 * n] = f64::INFINITY;
    let mut cost = vec![0.0; nv];
    cost[2 * n] = 1.0;
    let mut lp = LinearProgram::new(cost, lower, upper);
    for p in planes {
        let mut row = Vec::with_capacity(nv);
        row.extend_from_slice(&p.g);
        row.extend(p.g.iter().map(|g| -g));
        row.push(-1.0);
        lp.add_row(row, -p.a);
    }
    for (cr, rhs) in &c_rows {
        let mut row = Vec::with_capacity(nv);
        row.extend_from_slice(cr);
        row.extend(cr.iter().map(|v| -v));
        row.push(0.0);
        lp.add_row(row, rhs - dot(cr, x));
    }
    if norm == Norm::L1 {
        let mut row = vec![1.0; nv];
        row[2 * n] = 0.0;
        lp.add_row(row, radius);
    }

    let stage_a = lp.solve()?;
    let t_star = stage_a.objective;
    let gap = stage_a.duality_gap(&lp);
    if gap.abs() > 1e-9 * (1.0 + t_star.abs()) {
        log::warn!("tangent LP duality gap {gap:e} at level {t_star}");
    }

    let np = planes.len();
    let mut lambda: Vec<f64> = stage_a.row_duals[..np].to_vec();
    let total: f64 = lambda.iter().sum();
    if total > 0.0 {
        lambda.iter_mut().for_each(|l| *l /= total);
    }
    let mut g_agg = vec![0.0; n];
    for (l, p) in lambda.iter().zip(planes) {
        for (ga, g) in g_agg.iter_mut().zip(&p.g) {
            *ga += l * g;
        }
    }
    let mut g_reduced = g_agg.clone();
    for (mu, (cr, _)) in stage_a.row_duals[np..np + c_rows.len()].iter().zip(&c_rows) {
        for (gr, v) in g_reduced.iter_mut().zip(cr) {
            *gr += mu * v;
        }
    }

    // Among the level-t* solutions pick the one closest to x. The level is
    // tried exactly first, then with a rounding allowance.
    let mut least = lp.clone();
    least.cost = vec![1.0; nv];
    least.cost[2 * n] = 0.0;
    let mut d_sol = None;
    for slack in [0.0, 1e-12 * (1.0 + t_star.abs())] {
        least.upper[2 * n] = t_star + slack;
        match least.solve() {
            Ok(s) => {
                d_sol = Some(s.x);
                break;
            }
            Err(e) => log::debug!("least-motion pass at slack {slack} failed ({e})"),
        }
    }
    let d_sol = d_sol.unwrap_or(stage_a.x);
    let mut y_star: Vec<f64> = (0..n).map(|i| x[i] + d_sol[i] - d_sol[n + i]).collect();
    // x + d+ - d- can round past a bound it sits on
    if let FeasibleSet::Box { lower, upper } = c {
        for ((y, l), u) in y_star.iter_mut().zip(lower).zip(upper) {
            *y = y.clamp(*l, *u);
        }
    }
    let model_value = b.eval(&y_star)?;
    let thr = model_value - 1e-9 * (1.0 + model_value.abs());
    let active_planes = (0..np)
        .filter(|&i| lambda[i] > 1e-12 || planes[i].eval_unchecked(&y_star, x) >= thr)
        .collect();
    let tr_active = norm.dist(&y_star, x) >= radius * (1.0 - 1e-9);
    Ok(TangentSolution {
        y_star,
        model_value,
        multipliers: lambda,
        g_agg,
        g_reduced,
        active_planes,
        tr_active,
        duality_gap: gap,
    })
}

/// A trial point `z` with `z in C`, `||z - x|| <= M ||y* - x||` and
/// `f(x) - phi_k(z) >= theta (f(x) - phi_k(y*))`.
///
/// Randomised mode draws up to 20 points from shrinking boxes around `y*`,
/// seeded from `(seed, j, k)`, and falls back to `y*`.
pub fn trial_step(
    ts: &TangentSolution,
    b: &Bundle,
    c: &FeasibleSet,
    cfg: &SolverConfig,
    j: usize,
    k: usize,
) -> Vec<f64> {
    let TrialMode::Randomized(seed) = cfg.trial_mode else {
        return ts.y_star.clone();
    };
    let x = b.anchor();
    let f_x = b.f_anchor();
    let step = cfg.norm.dist(&ts.y_star, x);
    if step == 0.0 {
        return ts.y_star.clone();
    }
    let need = cfg.theta * (f_x - ts.model_value);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((j as u64) << 32) | k as u64);
    let mut width = step;
    for _ in 0..20 {
        let z: Vec<f64> = ts
            .y_star
            .iter()
            .map(|y| y + width * rng.random_range(-1.0..=1.0))
            .collect();
        let ok = c.contains(&z, 1e-12)
            && cfg.norm.dist(&z, x) <= cfg.m_factor * step
            && b.eval(&z).is_ok_and(|m| f_x - m >= need);
        if ok {
            return z;
        }
        width *= 0.5;
    }
    ts.y_star.clone()
}
