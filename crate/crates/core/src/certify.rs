//! Global certificates for box-constrained maximisation: integral global
//! optimisation (iterated superlevel-set means), the scaled-box stability
//! decision, and an exhaustive grid for small dimensions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::control::{spectral_abscissa_value, LftPlant};
use crate::error::{check_dim, Error, Result};

/// Objective handed to the certifiers.
pub type BoxFn<'a> = dyn Fn(&[f64]) -> Result<f64> + Sync + 'a;

const CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ZhengMode {
    MonteCarlo,
    /// Deterministic adaptive quadrature; one-dimensional boxes only.
    Quadrature1d,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZhengConfig {
    /// Samples per sweep are `samples_per_dim * m`.
    pub samples_per_dim: usize,
    pub var_tol: f64,
    pub max_sweeps: usize,
    pub seed: u64,
    pub mode: ZhengMode,
    /// Starting level; `None` starts below the minimum, so the first mean is
    /// taken over the whole box.
    pub alpha0: Option<f64>,
}

impl Default for ZhengConfig {
    fn default() -> Self {
        Self {
            samples_per_dim: 2000,
            var_tol: 1e-7,
            max_sweeps: 60,
            seed: 0,
            mode: ZhengMode::MonteCarlo,
            alpha0: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZhengResult {
    /// Best value found; never below the last level mean.
    pub alpha_star: f64,
    pub argbest: Vec<f64>,
    pub iterations: usize,
    /// Levels `alpha_1, alpha_2, ...` (the starting level excluded).
    pub history: Vec<f64>,
    /// Estimated standard error of each level.
    pub std_errors: Vec<f64>,
    /// Variance of `f` over the last superlevel-set sample.
    pub variance: f64,
}

fn check_box(lower: &[f64], upper: &[f64]) -> Result<()> {
    check_dim(lower.len(), upper.len())?;
    if lower.is_empty() {
        return Err(Error::InvalidInput("empty box".into()));
    }
    if lower.iter().zip(upper).any(|(l, u)| !(l <= u) || !l.is_finite() || !u.is_finite()) {
        return Err(Error::InvalidInput("box bounds must be finite with lower <= upper".into()));
    }
    Ok(())
}

/// Maximises `f` over `[lower, upper]` by iterating `alpha+ = mean of f over
/// {f >= alpha}` until the variance over the superlevel set drops below
/// `var_tol`.
pub fn zheng_maximize(f: &BoxFn, lower: &[f64], upper: &[f64], cfg: &ZhengConfig) -> Result<ZhengResult> {
    check_box(lower, upper)?;
    match cfg.mode {
        ZhengMode::MonteCarlo => zheng_monte_carlo(f, lower, upper, cfg),
        ZhengMode::Quadrature1d => {
            if lower.len() != 1 {
                return Err(Error::Unsupported("quadrature mode needs a one-dimensional box".into()));
            }
            zheng_quadrature(f, lower[0], upper[0], cfg)
        }
    }
}

fn sample_box(f: &BoxFn, lo: &[f64], hi: &[f64], count: usize, seed: u64, sweep: usize) -> Result<Vec<(Vec<f64>, f64)>> {
    let chunks = count.div_ceil(CHUNK);
    let parts: Vec<Result<Vec<(Vec<f64>, f64)>>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(((sweep as u64) << 32) | c as u64);
            let len = CHUNK.min(count - c * CHUNK);
            (0..len)
                .map(|_| {
                    let x: Vec<f64> = lo
                        .iter()
                        .zip(hi)
                        .map(|(l, h)| if h > l { rng.random_range(*l..=*h) } else { *l })
                        .collect();
                    let v = f(&x)?;
                    Ok((x, v))
                })
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(count);
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

fn mean_var(vals: impl Iterator<Item = f64> + Clone) -> (f64, f64, usize) {
    let n = vals.clone().count();
    let mean = vals.clone().sum::<f64>() / n as f64;
    let var = if n > 1 {
        vals.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    (mean, var, n)
}

fn zheng_monte_carlo(f: &BoxFn, lower: &[f64], upper: &[f64], cfg: &ZhengConfig) -> Result<ZhengResult> {
    let m = lower.len();
    let per_sweep = (cfg.samples_per_dim * m).max(1);
    let mut alpha = cfg.alpha0.unwrap_or(f64::NEG_INFINITY);
    let mut survivors: Vec<(Vec<f64>, f64)> = Vec::new();
    let (mut lo, mut hi) = (lower.to_vec(), upper.to_vec());
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut history = Vec::new();
    let mut std_errors = Vec::new();
    let mut variance = f64::INFINITY;
    let mut iterations = 0;

    for sweep in 0..cfg.max_sweeps {
        let fresh = sample_box(f, &lo, &hi, per_sweep, cfg.seed, sweep)?;
        for (x, v) in &fresh {
            if best.as_ref().is_none_or(|b| *v > b.1) {
                best = Some((x.clone(), *v));
            }
        }
        survivors.extend(fresh.into_iter().filter(|(_, v)| *v >= alpha));
        if survivors.is_empty() {
            log::warn!("empty superlevel-set sample at level {alpha}");
            break;
        }
        let (mean, var, n) = mean_var(survivors.iter().map(|s| s.1));
        iterations += 1;
        // every pooled value is >= alpha, so the sequence cannot decrease
        alpha = mean.max(alpha);
        variance = var;
        history.push(alpha);
        std_errors.push((var / n as f64).sqrt());
        if var < cfg.var_tol {
            break;
        }
        survivors.retain(|(_, v)| *v >= alpha);
        if survivors.is_empty() {
            break;
        }
        for d in 0..m {
            let (mn, mx) = survivors
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), s| (a.min(s.0[d]), b.max(s.0[d])));
            let pad = 0.05 * (mx - mn);
            lo[d] = (mn - pad).max(lower[d]);
            hi[d] = (mx + pad).min(upper[d]);
        }
    }
    let (argbest, best_v) = best.ok_or_else(|| Error::InvalidInput("no samples drawn".into()))?;
    Ok(ZhengResult {
        alpha_star: best_v.max(alpha),
        argbest,
        iterations,
        history,
        std_errors,
        variance,
    })
}

const GL_NODES: [f64; 5] = [
    0.0,
    -0.538_469_310_105_683_1,
    0.538_469_310_105_683_1,
    -0.906_179_845_938_664,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_47,
    0.478_628_670_499_366_47,
    0.236_926_885_056_189_08,
    0.236_926_885_056_189_08,
];

fn gauss(f: &dyn Fn(f64) -> Result<f64>, a: f64, b: f64) -> Result<f64> {
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    let mut s = 0.0;
    for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
        s += w * f(c + h * x)?;
    }
    Ok(s * h)
}

fn crossing(g: &dyn Fn(f64) -> Result<f64>, mut a: f64, mut b: f64) -> Result<f64> {
    let ga = g(a)? >= 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if (g(mid)? >= 0.0) == ga {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

fn zheng_quadrature(f: &BoxFn, lower: f64, upper: f64, cfg: &ZhengConfig) -> Result<ZhengResult> {
    const CELLS: usize = 2000;
    let f1 = |t: f64| f(&[t]);
    let nodes: Vec<f64> = (0..=CELLS)
        .map(|i| lower + (upper - lower) * i as f64 / CELLS as f64)
        .collect();
    let vals: Vec<f64> = nodes.iter().map(|t| f1(*t)).collect::<Result<_>>()?;
    let (bi, bv) = vals
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    let mut alpha = cfg.alpha0.unwrap_or(f64::NEG_INFINITY);
    let mut history = Vec::new();
    let mut variance = f64::INFINITY;
    let mut iterations = 0;

    for _ in 0..cfg.max_sweeps {
        // pieces of [lower, upper] where f >= alpha
        let g = |t: f64| Ok(f1(t)? - alpha);
        let mut pieces: Vec<(f64, f64)> = Vec::new();
        for i in 0..CELLS {
            let (a, b) = (nodes[i], nodes[i + 1]);
            let (ia, ib) = (vals[i] >= alpha, vals[i + 1] >= alpha);
            let piece = match (ia, ib) {
                (true, true) => Some((a, b)),
                (true, false) => Some((a, crossing(&g, a, b)?)),
                (false, true) => Some((crossing(&g, a, b)?, b)),
                (false, false) => None,
            };
            if let Some(p) = piece {
                match pieces.last_mut() {
                    Some(last) if last.1 == p.0 => last.1 = p.1,
                    _ => pieces.push(p),
                }
            }
        }
        let mut mass = 0.0;
        let mut integral = 0.0;
        for &(a, b) in &pieces {
            mass += b - a;
            integral += gauss(&f1, a, b)?;
        }
        if mass <= 0.0 {
            break;
        }
        let next = (integral / mass).max(alpha);
        let mut second = 0.0;
        for &(a, b) in &pieces {
            second += gauss(&|t| Ok((f1(t)? - next).powi(2)), a, b)?;
        }
        iterations += 1;
        variance = second / mass;
        let stalled = next - alpha <= 1e-15 * (1.0 + next.abs());
        alpha = next;
        history.push(alpha);
        if variance < cfg.var_tol || stalled {
            break;
        }
    }
    let std_errors = vec![0.0; history.len()];
    Ok(ZhengResult {
        alpha_star: bv.max(alpha),
        argbest: vec![nodes[bi]],
        iterations,
        history,
        std_errors,
        variance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// The shrunk box already contains unstable parameters: `d*` too large.
    Under,
    /// The enlarged box is still stable: `d*` too small.
    Over,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "verdict", content = "side")]
pub enum Verdict {
    Certified,
    Refuted(Side),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityDecision {
    pub verdict: Verdict,
    pub alpha_under: f64,
    pub alpha_over: f64,
    pub under: ZhengResult,
    pub over: ZhengResult,
}

/// Maximal `alpha(A(delta))` over `scale * [-1, 1]^m`.
pub fn max_alpha_on_scaled_box(plant: &LftPlant, scale: f64, cfg: &ZhengConfig) -> Result<ZhengResult> {
    let m = plant.n_params();
    let f = |d: &[f64]| spectral_abscissa_value(&plant.closed_loop_a(d)?);
    zheng_maximize(&f, &vec![-scale; m], &vec![scale; m], cfg)
}

/// `d*` is certified when the box shrunk by `1 - gamma` is stable and the
/// box grown by `1 + gamma` is not.
pub fn stability_decision(plant: &LftPlant, d_star: f64, gamma_conf: f64, cfg: &ZhengConfig) -> Result<StabilityDecision> {
    if !(d_star > 0.0) {
        return Err(Error::InvalidInput("d* must be positive".into()));
    }
    if !(gamma_conf > 0.0 && gamma_conf < 1.0) {
        return Err(Error::InvalidInput("confidence level must lie in (0, 1)".into()));
    }
    let under = max_alpha_on_scaled_box(plant, (1.0 - gamma_conf) * d_star, cfg)?;
    let over_cfg = ZhengConfig {
        seed: cfg.seed.wrapping_add(1),
        ..cfg.clone()
    };
    let over = max_alpha_on_scaled_box(plant, (1.0 + gamma_conf) * d_star, &over_cfg)?;
    let (alpha_under, alpha_over) = (under.alpha_star, over.alpha_star);
    let verdict = if alpha_under >= 0.0 {
        Verdict::Refuted(Side::Under)
    } else if alpha_over <= 0.0 {
        Verdict::Refuted(Side::Over)
    } else {
        Verdict::Certified
    };
    Ok(StabilityDecision {
        verdict,
        alpha_under,
        alpha_over,
        under,
        over,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub max_value: f64,
    pub argmax: Vec<f64>,
    pub evaluations: usize,
}

fn axis(l: f64, u: f64, step: f64) -> Vec<f64> {
    let k = ((u - l) / step - 1e-9).ceil().max(0.0) as usize;
    let mut pts: Vec<f64> = (0..k).map(|i| l + step * i as f64).collect();
    pts.push(u);
    pts
}

/// Exhaustive maximisation on the regular grid with spacing `step`, box
/// corners included. Ties go to the first grid point in row-major order.
pub fn grid_certify(f: &BoxFn, lower: &[f64], upper: &[f64], step: f64) -> Result<GridResult> {
    check_box(lower, upper)?;
    let m = lower.len();
    if m > 3 {
        return Err(Error::DimensionTooLarge(m));
    }
    if !(step > 0.0) {
        return Err(Error::InvalidInput("grid step must be positive".into()));
    }
    let axes: Vec<Vec<f64>> = lower.iter().zip(upper).map(|(l, u)| axis(*l, *u, step)).collect();
    let total: usize = axes.iter().map(Vec::len).product();
    let point = |mut idx: usize| -> Vec<f64> {
        let mut x = vec![0.0; m];
        for d in (0..m).rev() {
            x[d] = axes[d][idx % axes[d].len()];
            idx /= axes[d].len();
        }
        x
    };
    let best = (0..total)
        .into_par_iter()
        .map(|i| f(&point(i)).map(|v| (i, v)))
        .try_reduce(
            || (usize::MAX, f64::NEG_INFINITY),
            |a, b| {
                Ok(if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) { b } else { a })
            },
        )?;
    Ok(GridResult {
        max_value: best.1,
        argmax: point(best.0),
        evaluations: total,
    })
}

/// Coarse grid, then a fine grid on the coarse cell neighbourhood of the
/// coarse maximiser.
pub fn grid_certify_refined(f: &BoxFn, lower: &[f64], upper: &[f64], coarse: f64, fine: f64) -> Result<GridResult> {
    let c = grid_certify(f, lower, upper, coarse)?;
    let lo: Vec<f64> = c.argmax.iter().zip(lower).map(|(x, l)| (x - coarse).max(*l)).collect();
    let hi: Vec<f64> = c.argmax.iter().zip(upper).map(|(x, u)| (x + coarse).min(*u)).collect();
    let r = grid_certify(f, &lo, &hi, fine)?;
    Ok(if r.max_value >= c.max_value {
        GridResult {
            evaluations: r.evaluations + c.evaluations,
            ..r
        }
    } else {
        c
    })
}
