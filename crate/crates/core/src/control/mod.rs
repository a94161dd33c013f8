//! Parametric robustness: spectral abscissa and H-infinity oracles over the
//! uncertainty box, and the optimisation problems built from them.

pub mod hinf;
pub mod plant;

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::SolverConfig;
use crate::error::{check_dim, Error, Result};
use crate::feasible::FeasibleSet;
use crate::linalg::{eig_dense, eigenvalues, to_complex, EigenTriple};
use crate::model::Model;
use crate::oracle::Oracle;
use crate::solver::{multistart_solve, outer_solve, Problem, SolveResult};

pub use hinf::{hinf_norm, HinfNorm};
pub use plant::{build_delta_matrix, LftPlant, StateSpace};

/// Eigenvalues with `Re >= alpha - ACTIVE_EIG_RTOL (1 + |alpha|)` are active.
pub const ACTIVE_EIG_RTOL: f64 = 1e-8;
/// Relative accuracy requested from the H-infinity evaluator.
pub const HINF_TOL: f64 = 1e-10;

pub fn spectral_abscissa_value(a: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(a)?[0].re)
}

/// `alpha(A)` with the active eigen-triples, leading first.
pub fn spectral_abscissa(a: &DMatrix<f64>) -> Result<(f64, Vec<EigenTriple>)> {
    let all = eig_dense(a)?;
    let alpha = all[0].value.re;
    let thr = alpha - ACTIVE_EIG_RTOL * (1.0 + alpha.abs());
    let active = all.into_iter().filter(|t| t.value.re >= thr).collect();
    Ok((alpha, active))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaGradient {
    pub alpha: f64,
    /// Gradient of the leading active eigenvalue's real part.
    pub grad: Vec<f64>,
    /// Gradients of all active eigenvalues, one per conjugate class.
    pub active_grads: Vec<Vec<f64>>,
    /// Several distinct active eigenvalues, or a (near) defective one.
    pub degenerate: bool,
}

fn eigen_gradient(plant: &LftPlant, delta: &[f64], t: &EigenTriple) -> Result<(Vec<f64>, bool)> {
    let uv = t.left.dotc(&t.right);
    let defective = uv.norm() < 1e-8;
    let grad = (0..plant.n_params())
        .map(|i| {
            let da = to_complex(&plant.d_a_d_delta(delta, i)?);
            let num = t.left.dotc(&(da * &t.right));
            Ok((num / uv).re)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok((grad, defective))
}

/// `d alpha(A(delta)) / d delta_i = Re(u^H dA_i v / u^H v)`.
pub fn alpha_gradient(plant: &LftPlant, delta: &[f64]) -> Result<AlphaGradient> {
    check_dim(plant.n_params(), delta.len())?;
    let a = plant.closed_loop_a(delta)?;
    let (alpha, active) = spectral_abscissa(&a)?;
    let mut active_grads = Vec::new();
    let mut degenerate = false;
    let mut seen: Vec<nalgebra::Complex<f64>> = Vec::new();
    for t in &active {
        let rep = if t.value.im < 0.0 { t.value.conj() } else { t.value };
        if seen.iter().any(|s| (s - rep).norm() <= 1e-10 * (1.0 + rep.norm())) {
            // conjugate partner, or a repeated eigenvalue (degenerate)
            if t.value.im == 0.0 || seen.iter().any(|s| (s - t.value).norm() <= 1e-10 * (1.0 + rep.norm())) {
                degenerate = true;
            }
            continue;
        }
        seen.push(rep);
        let (g, defective) = eigen_gradient(plant, delta, t)?;
        degenerate |= defective;
        active_grads.push(g);
    }
    degenerate |= active_grads.len() > 1;
    Ok(AlphaGradient {
        alpha,
        grad: active_grads[0].clone(),
        active_grads,
        degenerate,
    })
}

/// `delta -> -alpha(A(delta))`, the objective of worst-case spectral abscissa
/// search, and the inner function of the distance-to-instability penalty.
#[derive(Debug, Clone)]
pub struct NegAlpha {
    pub plant: LftPlant,
}

impl Oracle for NegAlpha {
    fn dim(&self) -> usize {
        self.plant.n_params()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(-spectral_abscissa_value(&self.plant.closed_loop_a(x)?)?)
    }

    fn active_gradients(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        let g = alpha_gradient(&self.plant, x)?;
        Ok(g.active_grads
            .into_iter()
            .map(|g| g.into_iter().map(|v| -v).collect())
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HinfGradient {
    pub value: f64,
    pub omega: f64,
    pub grad: Vec<f64>,
}

/// `||T(delta)||_inf` and its gradient `Re(u^H dT_i v)` at the peak frequency.
pub fn hinf_gradient(plant: &LftPlant, delta: &[f64]) -> Result<HinfGradient> {
    check_dim(plant.n_params(), delta.len())?;
    let ss = plant.closed_loop(delta)?;
    let h = hinf_norm(&ss.a, &ss.b, &ss.c, &ss.d, HINF_TOL)?;
    let t = plant.transfer_eval(delta, h.omega)?;
    let (_, u, v) = crate::linalg::svd_top(&t);
    let grad = (0..plant.n_params())
        .map(|i| {
            let dt = plant.transfer_derivative(delta, h.omega, i)?;
            Ok(u.dotc(&(dt * &v)).re)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(HinfGradient {
        value: h.value,
        omega: h.omega,
        grad,
    })
}

/// `||T(delta)||_inf` alone.
pub fn hinf_value(plant: &LftPlant, delta: &[f64]) -> Result<f64> {
    let ss = plant.closed_loop(delta)?;
    Ok(hinf_norm(&ss.a, &ss.b, &ss.c, &ss.d, HINF_TOL)?.value)
}

/// `delta -> -||T(delta)||_inf`.
#[derive(Debug, Clone)]
pub struct NegHinf {
    pub plant: LftPlant,
}

impl Oracle for NegHinf {
    fn dim(&self) -> usize {
        self.plant.n_params()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(-hinf_value(&self.plant, x)?)
    }

    fn active_gradients(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        let g = hinf_gradient(&self.plant, x)?;
        Ok(vec![g.grad.into_iter().map(|v| -v).collect()])
    }
}

/// Minimise `-alpha(A(delta))` over `[-1, 1]^m` from the nominal point.
pub fn worst_case_alpha_problem(plant: &LftPlant) -> Result<Problem> {
    let m = plant.n_params();
    Problem::new(
        Model::Standard(Arc::new(NegAlpha { plant: plant.clone() })),
        FeasibleSet::cube(m, 1.0),
        vec![0.0; m],
    )
}

/// Minimise `-||T(delta)||_inf` over `[-1, 1]^m` from the nominal point.
pub fn worst_case_hinf_problem(plant: &LftPlant) -> Result<Problem> {
    if !plant.has_performance_channel() {
        return Err(Error::InvalidInput("plant has no performance channel".into()));
    }
    let m = plant.n_params();
    Problem::new(
        Model::Standard(Arc::new(NegHinf { plant: plant.clone() })),
        FeasibleSet::cube(m, 1.0),
        vec![0.0; m],
    )
}

/// The nominal point, the box vertices when there are at most 64, then
/// `extra` seeded uniform points of `[-1, 1]^m`.
pub fn box_starts(m: usize, extra: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; m]];
    if m <= 6 {
        for mask in 0..1usize << m {
            out.push((0..m).map(|i| if mask >> i & 1 == 1 { 1.0 } else { -1.0 }).collect());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..extra {
        out.push((0..m).map(|_| rng.random_range(-1.0..=1.0)).collect());
    }
    out
}

/// Best local maximiser over several starts.
#[derive(Debug, Clone)]
pub struct WorstCase {
    pub value: f64,
    pub delta: Vec<f64>,
    /// Index into the start list of the winning run.
    pub start: usize,
    pub runs: Vec<SolveResult>,
}

fn worst_case(problem: &Problem, starts: &[Vec<f64>], cfg: &SolverConfig) -> Result<WorstCase> {
    let (start, runs) = multistart_solve(problem, starts, cfg)?;
    Ok(WorstCase {
        value: -runs[start].f_final,
        delta: runs[start].x_final.clone(),
        start,
        runs,
    })
}

/// Largest spectral abscissa over the unit box found from `starts`.
pub fn worst_case_alpha(plant: &LftPlant, starts: &[Vec<f64>], cfg: &SolverConfig) -> Result<WorstCase> {
    worst_case(&worst_case_alpha_problem(plant)?, starts, cfg)
}

/// Largest H-infinity norm over the unit box found from `starts`.
pub fn worst_case_hinf(plant: &LftPlant, starts: &[Vec<f64>], cfg: &SolverConfig) -> Result<WorstCase> {
    worst_case(&worst_case_hinf_problem(plant)?, starts, cfg)
}

/// Variables `(t, delta)`, `-t <= delta_i <= t`, objective
/// `t + c max(0, -alpha(A(delta)))`.
pub fn distance_to_instability_problem(plant: &LftPlant, c: f64) -> Result<Problem> {
    if !(c > 0.0) {
        return Err(Error::InvalidConfig("penalty weight must be positive".into()));
    }
    let alpha0 = spectral_abscissa_value(&plant.a)?;
    if alpha0 >= 0.0 {
        return Err(Error::Unstable(alpha0));
    }
    let m = plant.n_params();
    let mut rows = Vec::with_capacity(2 * m);
    for i in 0..m {
        for s in [1.0, -1.0] {
            let mut r = vec![0.0; m + 1];
            r[0] = -1.0;
            r[i + 1] = s;
            rows.push(r);
        }
    }
    let feasible = FeasibleSet::polyhedron(rows, vec![0.0; 2 * m])?;
    let model = Model::PenaltyMax {
        inner: Box::new(Model::Standard(Arc::new(NegAlpha { plant: plant.clone() }))),
        weight: c,
    };
    Problem::new(model, feasible, vec![0.0; m + 1])
}

/// Default penalty weight `100 (1 + 1/|alpha(A)|)`.
pub fn default_penalty_weight(plant: &LftPlant) -> Result<f64> {
    let alpha0 = spectral_abscissa_value(&plant.a)?;
    if alpha0 >= 0.0 {
        return Err(Error::Unstable(alpha0));
    }
    Ok(100.0 * (1.0 + 1.0 / alpha0.abs()))
}

#[derive(Debug, Clone)]
pub struct DistanceResult {
    pub d_star: f64,
    pub delta: Vec<f64>,
    /// `alpha(A(delta))` at the returned point.
    pub alpha: f64,
    pub penalty: f64,
    pub escalations: usize,
    /// No destabilising parameter inside the unit box.
    pub robustly_stable_on_box: bool,
    pub solve: SolveResult,
}

/// Solves the penalty program, multiplying the weight by 10 (at most three
/// times) while the returned point still pays a penalty.
pub fn distance_to_instability(plant: &LftPlant, cfg: &SolverConfig) -> Result<DistanceResult> {
    let mut c = default_penalty_weight(plant)?;
    let mut escalations = 0;
    loop {
        let problem = distance_to_instability_problem(plant, c)?;
        let solve = outer_solve(&problem, cfg)?;
        let x = &solve.x_final;
        let delta = x[1..].to_vec();
        let alpha = spectral_abscissa_value(&plant.closed_loop_a(&delta)?)?;
        let violated = alpha < -1e-8;
        if !violated || escalations == 3 {
            let d_star = x[0];
            return Ok(DistanceResult {
                d_star,
                delta,
                alpha,
                penalty: c,
                escalations,
                robustly_stable_on_box: d_star > 1.0,
                solve,
            });
        }
        c *= 10.0;
        escalations += 1;
    }
}
