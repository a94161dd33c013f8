//! Outer/inner trust-region loops with cutting planes.
//!
//! The inner loop at a serious iterate `x` solves tangent programs, tests
//! trial points with the ratio `rho`, and on rejection either adds a cutting
//! plane (bundle mode) or only shrinks the radius (classical mode). The
//! radius is halved only when the secondary ratio `rho_tilde` says the ideal
//! model, not just the working model, was too optimistic.

use rayon::prelude::*;
use serde::Serialize;

use crate::bundle::{norm2, Bundle, PlaneOrigin};
use crate::config::{Mode, Norm, SolverConfig};
use crate::error::{check_dim, Error, Result};
use crate::feasible::FeasibleSet;
use crate::model::Model;
use crate::tangent::{solve_tangent, trial_step, TangentSolution};
use crate::trace::{SolverTrace, StepKind, TraceRecord};

/// Relative floor on the predicted decrease below which ratios are noise.
pub const PRED_GUARD: f64 = 1e-15;

#[derive(Clone, Debug)]
pub struct Problem {
    pub model: Model,
    pub feasible: FeasibleSet,
    pub x0: Vec<f64>,
}

impl Problem {
    pub fn new(model: Model, feasible: FeasibleSet, x0: Vec<f64>) -> Result<Self> {
        check_dim(model.dim(), x0.len())?;
        feasible.validate(x0.len())?;
        if !feasible.contains(&x0, 1e-12) {
            return Err(Error::InvalidInput("starting point is not feasible".into()));
        }
        Ok(Self { model, feasible, x0 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Critical,
    InnerStall,
    BudgetExhausted,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Critical => "critical",
            Status::InnerStall => "inner_stall",
            Status::BudgetExhausted => "budget_exhausted",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub x_final: Vec<f64>,
    pub f_final: f64,
    pub status: Status,
    pub serious_steps: usize,
    /// Euclidean norm of the last reduced aggregate subgradient.
    pub g_norm: f64,
    pub trace: SolverTrace,
}

fn guard(f_x: f64) -> f64 {
    PRED_GUARD * (1.0 + f_x.abs())
}

/// `(f(x) - f(z)) / (f(x) - phi_k(z, x))`, or `None` when the predicted
/// decrease is below the guard.
pub fn compute_rho(f_x: f64, f_z: f64, model_z: f64) -> Option<f64> {
    let pred = f_x - model_z;
    (pred > guard(f_x)).then(|| (f_x - f_z) / pred)
}

/// `(f(x) - phi(z, x)) / (f(x) - phi_k(z, x))`.
pub fn compute_rho_tilde(f_x: f64, ideal_z: f64, model_z: f64) -> Option<f64> {
    compute_rho(f_x, ideal_z, model_z)
}

pub fn update_radius(radius: f64, rho_tilde: f64, cfg: &SolverConfig) -> f64 {
    if rho_tilde >= cfg.gamma_tilde {
        radius / 2.0
    } else {
        radius
    }
}

pub fn update_memory_radius(r_accept: f64, rho: f64, cfg: &SolverConfig) -> f64 {
    if rho >= cfg.big_gamma {
        2.0 * r_accept
    } else {
        r_accept
    }
}

pub fn stopping_serious(step_rel: f64, dec_rel: f64, g_min_rel: f64, cfg: &SolverConfig) -> bool {
    step_rel < cfg.tol1 && dec_rel < cfg.tol2 && g_min_rel < cfg.tol3
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct InnerCounters {
    /// Current inner iteration, starting at 1.
    pub k: usize,
    /// Consecutive null steps passing the small-step triple.
    pub nu: usize,
}

/// Updates `nu` with the triple at step `k` and reports whether the inner
/// loop must stop.
pub fn stopping_inner(
    step_rel: f64,
    dec_rel: f64,
    g_rel: f64,
    counters: &mut InnerCounters,
    cfg: &SolverConfig,
) -> bool {
    if step_rel < cfg.tol1 && dec_rel < cfg.tol2 && g_rel < cfg.tol3 {
        counters.nu += 1;
    } else {
        counters.nu = 0;
    }
    counters.k > cfg.k_max || counters.nu >= cfg.nu_max
}

#[derive(Debug, Clone, PartialEq)]
pub enum InnerOutcome {
    Accepted {
        z: Vec<f64>,
        f_z: f64,
        /// Radius of the accepted trial.
        radius: f64,
        rho: f64,
        g_norm: f64,
        /// The radius was halved at least once in this inner loop.
        reduced: bool,
    },
    /// No serious step; `critical` when the stop came with a vanishing
    /// aggregate subgradient.
    Stalled { critical: bool, g_norm: f64 },
}

pub struct Solver {
    cfg: SolverConfig,
}

impl Solver {
    pub fn new(cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn solve(&self, problem: &Problem) -> Result<SolveResult> {
        outer_solve(problem, &self.cfg)
    }
}

/// Runs the full method from `problem.x0`.
pub fn outer_solve(problem: &Problem, cfg: &SolverConfig) -> Result<SolveResult> {
    cfg.validate()?;
    let model = &problem.model;
    let c = &problem.feasible;
    let mut x = problem.x0.clone();
    let mut f_x = model.objective(&x)?;
    let mut memory = cfg.r_init;
    let mut trace = SolverTrace::default();
    let mut carried: Option<Bundle> = None;
    let mut last_reduced_g: Option<f64> = None;
    let mut g_norm = f64::NAN;
    let recycle = cfg.recycle_planes && cfg.mode == Mode::Bundle && model.planes_are_global_minorants();

    for j in 1..=cfg.max_serious {
        let (outcome, bundle) = inner_loop(model, c, cfg, &x, f_x, memory, j, carried.as_ref(), &mut trace)?;
        match outcome {
            InnerOutcome::Stalled { critical, g_norm: g } => {
                return Ok(SolveResult {
                    x_final: x,
                    f_final: f_x,
                    status: if critical { Status::Critical } else { Status::InnerStall },
                    serious_steps: j - 1,
                    g_norm: g,
                    trace,
                });
            }
            InnerOutcome::Accepted {
                z,
                f_z,
                radius,
                rho,
                g_norm: g,
                reduced,
            } => {
                g_norm = g;
                let g_min = match (reduced, last_reduced_g) {
                    (false, Some(prev)) => g.min(prev),
                    _ => g,
                };
                if reduced {
                    last_reduced_g = Some(g);
                }
                let diff: Vec<f64> = x.iter().zip(&z).map(|(a, b)| a - b).collect();
                let step_rel = norm2(&diff) / (1.0 + norm2(&x));
                let scale = 1.0 + f_x.abs();
                let done = stopping_serious(step_rel, (f_x - f_z) / scale, g_min / scale, cfg);
                carried = recycle.then_some(bundle);
                x = z;
                f_x = f_z;
                if done {
                    return Ok(SolveResult {
                        x_final: x,
                        f_final: f_x,
                        status: Status::Critical,
                        serious_steps: j,
                        g_norm,
                        trace,
                    });
                }
                memory = update_memory_radius(radius, rho, cfg);
            }
        }
    }
    Ok(SolveResult {
        x_final: x,
        f_final: f_x,
        status: Status::BudgetExhausted,
        serious_steps: cfg.max_serious,
        g_norm,
        trace,
    })
}

/// Runs [`outer_solve`] from each start in parallel. Returns every result
/// and the index of the lowest final value (ties to the earlier start).
pub fn multistart_solve(problem: &Problem, starts: &[Vec<f64>], cfg: &SolverConfig) -> Result<(usize, Vec<SolveResult>)> {
    if starts.is_empty() {
        return Err(Error::InvalidInput("no starting points".into()));
    }
    let runs = starts
        .par_iter()
        .map(|s| {
            let p = Problem::new(problem.model.clone(), problem.feasible.clone(), s.clone())?;
            outer_solve(&p, cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    let best = (1..runs.len()).fold(0, |b, i| if runs[i].f_final < runs[b].f_final { i } else { b });
    Ok((best, runs))
}

/// One inner loop at the serious iterate `x`. Returns the outcome and the
/// final bundle (for plane recycling).
#[allow(clippy::too_many_arguments)]
pub fn inner_loop(
    model: &Model,
    c: &FeasibleSet,
    cfg: &SolverConfig,
    x: &[f64],
    f_x: f64,
    r_init: f64,
    j: usize,
    previous: Option<&Bundle>,
    trace: &mut SolverTrace,
) -> Result<(InnerOutcome, Bundle)> {
    let exact = model.cut(x, x, 0)?;
    let mut bundle = Bundle::new(x.to_vec(), f_x, exact, cfg.max_bundle)?;
    if let Some(prev) = previous {
        for mut p in prev.recycled_planes(x) {
            if p.is_exactness() {
                p.origin = PlaneOrigin::NullStep(prev.anchor().to_vec());
            }
            bundle.add(p, x)?;
        }
    }
    let mut radius = r_init;
    let mut counters = InnerCounters::default();
    let mut reduced = false;
    let scale = 1.0 + f_x.abs();
    let xn = 1.0 + norm2(x);

    loop {
        counters.k += 1;
        let k = counters.k;
        if k > cfg.k_max {
            return Ok((stalled(false, f64::NAN), bundle));
        }
        let ts = match tangent(&bundle, c, radius, cfg) {
            Ok(ts) => ts,
            Err(Error::ZeroGradient) => return Ok((stalled(true, 0.0), bundle)),
            Err(e) => return Err(e),
        };
        let g_norm = norm2(&ts.g_reduced);
        let pred = f_x - ts.model_value;
        if pred <= guard(f_x) {
            return Ok((stalled(g_norm / scale < cfg.tol3, g_norm), bundle));
        }
        bundle.mark_active(&ts.active_planes);
        let z = trial_step(&ts, &bundle, c, cfg, j, k);
        let f_z = model.objective(&z)?;
        let model_z = bundle.eval(&z)?;
        let Some(rho) = compute_rho(f_x, f_z, model_z) else {
            return Ok((stalled(g_norm / scale < cfg.tol3, g_norm), bundle));
        };
        let mut record = TraceRecord {
            j,
            k,
            kind: StepKind::Serious,
            x: z.clone(),
            f: f_z,
            f_anchor: f_x,
            rho,
            rho_tilde: f64::NAN,
            radius,
            g_norm,
            model_y: ts.model_value,
            model_z,
            planes: bundle.len(),
        };
        if rho >= cfg.gamma {
            trace.push(record);
            let outcome = InnerOutcome::Accepted {
                z,
                f_z,
                radius,
                rho,
                g_norm,
                reduced,
            };
            return Ok((outcome, bundle));
        }

        let ideal_z = model.eval(&z, x)?;
        let rho_tilde = compute_rho_tilde(f_x, ideal_z, model_z).unwrap_or(f64::NAN);
        match cfg.mode {
            Mode::Classical => {
                radius /= 2.0;
                reduced = true;
            }
            Mode::Bundle => {
                bundle.add(model.cut(x, &z, k)?, x)?;
                let next = update_radius(radius, rho_tilde, cfg);
                reduced |= next < radius;
                radius = next;
            }
        }
        record.kind = StepKind::Null;
        record.rho_tilde = rho_tilde;
        record.planes = bundle.len();
        trace.push(record);

        let step_rel = norm2(&diff(&z, x)) / xn;
        if stopping_inner(step_rel, (f_x - f_z) / scale, g_norm / scale, &mut counters, cfg) {
            let critical = counters.nu >= cfg.nu_max;
            return Ok((stalled(critical, g_norm), bundle));
        }
    }
}

fn stalled(critical: bool, g_norm: f64) -> InnerOutcome {
    InnerOutcome::Stalled { critical, g_norm }
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(a, b)| a - b).collect()
}

fn tangent(b: &Bundle, c: &FeasibleSet, radius: f64, cfg: &SolverConfig) -> Result<TangentSolution> {
    if cfg.norm == Norm::L2 && b.len() > 1 {
        return Err(Error::Unsupported(
            "euclidean norm requires classical mode (single plane)".into(),
        ));
    }
    solve_tangent(b, c, radius, cfg.norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{AffinePiece, MaxAffine, Quadratic, SmoothPiece};
    use crate::oracle::MaxOfSmooth;
    use std::sync::Arc;

    fn l1_box_problem() -> Problem {
        let f = MaxAffine::weighted_l1(&[1.0, 2.0]);
        Problem::new(
            Model::Standard(Arc::new(f)),
            FeasibleSet::cube(2, 2.0),
            vec![1.5, 1.0],
        )
        .unwrap()
    }

    #[test]
    fn rho_examples() {
        assert_eq!(compute_rho(1.0, 0.5, 0.5), Some(1.0));
        assert_eq!(compute_rho(1.0, 0.5, 1.0), None);
        let rt = compute_rho_tilde(1.0, 0.9, 0.5).unwrap();
        assert!((rt - 0.2).abs() < 1e-15);
    }

    #[test]
    fn radius_rules() {
        let cfg = SolverConfig::default();
        assert_eq!(update_radius(1.0, 0.5, &cfg), 0.5);
        assert_eq!(update_radius(1.0, 0.0001, &cfg), 1.0);
        assert_eq!(update_memory_radius(1.0, 0.15, &cfg), 2.0);
        assert_eq!(update_memory_radius(1.0, 0.05, &cfg), 1.0);
    }

    #[test]
    fn stopping_examples() {
        let cfg = SolverConfig::default();
        assert!(stopping_serious(1e-7, 1e-8, 1e-8, &cfg));
        assert!(!stopping_serious(1e-7, 1e-8, 0.3, &cfg));
        let mut c = InnerCounters { k: 51, nu: 0 };
        assert!(stopping_inner(1.0, 1.0, 1.0, &mut c, &cfg));
        let mut c = InnerCounters { k: 3, nu: 4 };
        assert!(stopping_inner(1e-9, -1.0, 1e-9, &mut c, &cfg));
        let mut c = InnerCounters { k: 3, nu: 4 };
        assert!(!stopping_inner(1e-9, -1.0, 1.0, &mut c, &cfg));
        assert_eq!(c.nu, 0);
    }

    #[test]
    fn convex_l1_box_converges() {
        let r = outer_solve(&l1_box_problem(), &SolverConfig::default()).unwrap();
        assert_eq!(r.status, Status::Critical);
        assert!(r.f_final <= 1e-5, "{}", r.f_final);
        assert!(r.x_final.iter().all(|v| v.abs() <= 1e-5));
    }

    #[test]
    fn serious_values_strictly_decrease() {
        let r = outer_solve(&l1_box_problem(), &SolverConfig::default()).unwrap();
        let fs: Vec<f64> = r.trace.serious().map(|s| s.f).collect();
        assert!(fs.windows(2).all(|w| w[1] < w[0]));
        assert!(r.trace.serious().all(|s| s.rho >= 1e-4));
    }

    #[test]
    fn zero_function_stalls_immediately() {
        let f = MaxAffine::new(vec![AffinePiece::new(0.0, vec![0.0, 0.0])]).unwrap();
        let p = Problem::new(Model::Standard(Arc::new(f)), FeasibleSet::AllSpace, vec![1.0, 2.0]).unwrap();
        let r = outer_solve(&p, &SolverConfig::default()).unwrap();
        assert_eq!(r.serious_steps, 0);
        assert_eq!(r.status, Status::Critical);
        assert_eq!(r.x_final, vec![1.0, 2.0]);
        assert!(r.trace.records.is_empty());
    }

    #[test]
    fn classical_mode_on_smooth_quadratic_matches_textbook() {
        // f = 0.5 (x1^2 + 4 x2^2); classical Euclidean trust region with
        // steepest-descent steps and the same radius rules.
        let q: Arc<dyn SmoothPiece> = Arc::new(Quadratic {
            q: vec![vec![1.0, 0.0], vec![0.0, 4.0]],
            c: vec![0.0, 0.0],
            r: 0.0,
        });
        let f = MaxOfSmooth::new(2, vec![q]).unwrap();
        let p = Problem::new(Model::Standard(Arc::new(f)), FeasibleSet::AllSpace, vec![2.0, 1.0]).unwrap();
        let cfg = SolverConfig {
            max_serious: 30,
            ..SolverConfig::classical(0.25, 0.75)
        };
        let r = outer_solve(&p, &cfg).unwrap();

        let fq = |x: [f64; 2]| 0.5 * (x[0] * x[0] + 4.0 * x[1] * x[1]);
        let mut x: [f64; 2] = [2.0, 1.0];
        let mut big_r = cfg.r_init;
        let mut expected = Vec::new();
        'outer: for _ in 0..30 {
            let mut rad = big_r;
            for _ in 0..cfg.k_max {
                let g = [x[0], 4.0 * x[1]];
                let gn = (g[0] * g[0] + g[1] * g[1]).sqrt();
                let z = [x[0] - rad * g[0] / gn, x[1] - rad * g[1] / gn];
                let rho = (fq(x) - fq(z)) / (rad * gn);
                if rho >= cfg.gamma {
                    big_r = if rho >= cfg.big_gamma { 2.0 * rad } else { rad };
                    x = z;
                    expected.push(x);
                    continue 'outer;
                }
                rad /= 2.0;
            }
            break;
        }
        let got: Vec<&TraceRecord> = r.trace.serious().collect();
        let m = got.len().min(expected.len()).min(15);
        assert!(m >= 10);
        for i in 0..m {
            assert!((got[i].x[0] - expected[i][0]).abs() < 1e-12);
            assert!((got[i].x[1] - expected[i][1]).abs() < 1e-12);
        }
    }
}
