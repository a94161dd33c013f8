//! Command-line front end: `solve`, `certify` and `dragon`.
//!
//! Exit codes: 0 on a critical (or certified) outcome, 2 when the run ends
//! without one, 1 on any error. Reports are JSON with every float written to
//! 17 significant digits.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;

use crate::bench::{dragon_function, dragon_polygon, dragon_quantities, dragon_rho, dragon_start};
use crate::certify::{grid_certify_refined, stability_decision, zheng_maximize, Side, Verdict, ZhengConfig};
use crate::control::{
    box_starts, distance_to_instability, hinf_value, spectral_abscissa_value, worst_case_alpha, worst_case_hinf,
    LftPlant,
};
use crate::trace::fmt_float;
use crate::{outer_solve, AffinePiece, Error, FeasibleSet, MaxAffine, Mode, Model, Norm, Problem, Result, SolveResult, SolverConfig, Status};

/// Float serialized with 17 significant digits; non-finite values become `null`.
#[derive(Debug, Clone, Copy)]
struct F(f64);

impl Serialize for F {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return s.serialize_none();
        }
        RawValue::from_string(fmt_float(self.0))
            .map_err(serde::ser::Error::custom)?
            .serialize(s)
    }
}

fn fv(v: &[f64]) -> Vec<F> {
    v.iter().copied().map(F).collect()
}

#[derive(Parser, Debug)]
#[command(name = "nstr", version, about = "Bundle trust-region solver and robustness certifier")]
struct Cli {
    /// Worker threads for sampling and multi-start (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Minimise a problem file, or run a robustness task on a plant file.
    Solve(SolveArgs),
    /// Compare solver values with a global certifier, or test a distance.
    Certify(CertifyArgs),
    /// Cauchy-point steps against cutting planes on the dragon function.
    Dragon(DragonArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Task {
    Min,
    WcAlpha,
    WcHinf,
    Distance,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ModeArg {
    Bundle,
    Classical,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum NormArg {
    Inf,
    L1,
    L2,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Method {
    Zheng,
    Grid,
}

#[derive(Args, Debug, Clone, Default)]
struct SolverFlags {
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    norm: Option<NormArg>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long = "gamma-tilde")]
    gamma_tilde: Option<f64>,
    #[arg(long = "Gamma")]
    big_gamma: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long = "M")]
    m_factor: Option<f64>,
    #[arg(long = "R0")]
    r0: Option<f64>,
    #[arg(long = "max-serious")]
    max_serious: Option<usize>,
}

impl SolverFlags {
    fn apply(&self, cfg: &mut SolverConfig) {
        if let Some(m) = self.mode {
            cfg.mode = match m {
                ModeArg::Bundle => Mode::Bundle,
                ModeArg::Classical => Mode::Classical,
            };
        }
        if let Some(n) = self.norm {
            cfg.norm = match n {
                NormArg::Inf => Norm::Inf,
                NormArg::L1 => Norm::L1,
                NormArg::L2 => Norm::L2,
            };
        }
        let set = |dst: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut cfg.gamma, self.gamma);
        set(&mut cfg.gamma_tilde, self.gamma_tilde);
        set(&mut cfg.big_gamma, self.big_gamma);
        set(&mut cfg.theta, self.theta);
        set(&mut cfg.m_factor, self.m_factor);
        set(&mut cfg.r_init, self.r0);
        if let Some(k) = self.max_serious {
            cfg.max_serious = k;
        }
    }
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// Problem file (JSON), plant file for robustness tasks, or a built-in:
    /// `dragon`, `l1box`, `scalar`.
    #[arg(long)]
    problem: String,
    #[arg(long, value_enum, default_value = "min")]
    task: Task,
    #[command(flatten)]
    solver: SolverFlags,
    /// Seed for randomized starts; recorded in the report.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Extra random starts for worst-case tasks.
    #[arg(long, default_value_t = 4)]
    starts: usize,
    /// Output directory for report.json and trace.csv.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CertifyArgs {
    /// Plant file (JSON) or the built-in `scalar`.
    #[arg(long)]
    problem: String,
    #[arg(long, value_enum, default_value = "wc-alpha")]
    task: Task,
    #[arg(long, value_enum, default_value = "zheng")]
    method: Method,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Distance to test; computed by the solver when omitted.
    #[arg(long)]
    dstar: Option<f64>,
    #[arg(long = "gamma-conf", default_value_t = 0.05)]
    gamma_conf: f64,
    /// Coarse and fine grid spacing.
    #[arg(long, default_value_t = 0.01)]
    step: f64,
    #[arg(long, default_value_t = 0.001)]
    fine: f64,
    #[arg(long, default_value_t = 4)]
    starts: usize,
    #[command(flatten)]
    solver: SolverFlags,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DragonArgs {
    #[arg(long, default_value_t = 0.9)]
    gamma: f64,
    #[arg(long = "Gamma", default_value_t = 1.0)]
    big_gamma: f64,
    #[arg(long = "gamma-tilde", default_value_t = 0.95)]
    gamma_tilde: f64,
    /// Level of the starting polygon.
    #[arg(long, default_value_t = 11.0)]
    a: f64,
    /// First coordinate of the start; defaults to a / (11 sqrt 2).
    #[arg(long)]
    x1: Option<f64>,
    #[arg(long = "max-serious", default_value_t = 500)]
    max_serious: usize,
    /// Also write the level polygons through the classical iterates.
    #[arg(long = "emit-polygon")]
    emit_polygon: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let work = || match &cli.cmd {
        Command::Solve(a) => cmd_solve(a),
        Command::Certify(a) => cmd_certify(a),
        Command::Dragon(a) => cmd_dragon(a),
    };
    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(work),
            Err(e) => Err(Error::InvalidConfig(format!("thread pool: {e}"))),
        },
        None => work(),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

// problem files

#[derive(Deserialize, Debug)]
#[serde(rename_all = "snake_case")]
enum ObjectiveSpec {
    MaxAffine(Vec<AffinePiece>),
    WeightedL1(Vec<f64>),
}

#[derive(Deserialize, Debug, Clone, Copy, Default)]
#[serde(rename_all = "snake_case")]
enum ModelKind {
    #[default]
    Standard,
    ConvexSelf,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    objective: ObjectiveSpec,
    #[serde(default)]
    model: ModelKind,
    #[serde(default = "all_space")]
    feasible: FeasibleSet,
    x0: Vec<f64>,
    #[serde(default)]
    solver: Option<SolverConfig>,
}

fn all_space() -> FeasibleSet {
    FeasibleSet::AllSpace
}

fn read_file(path: &str) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{path}: {e}")))
}

/// Named problem and its file-level solver settings.
fn load_problem(name: &str, flags: &SolverFlags) -> Result<(Problem, SolverConfig)> {
    match name {
        "dragon" => {
            let classical = flags.mode == Some(ModeArg::Classical);
            let cfg = SolverConfig {
                gamma: 0.9,
                gamma_tilde: 0.95,
                big_gamma: 1.0,
                // the Cauchy point is a Euclidean notion
                norm: if classical { Norm::L2 } else { Norm::Inf },
                max_serious: 500,
                ..SolverConfig::default()
            };
            let f = Arc::new(dragon_function());
            let model = if classical { Model::Standard(f) } else { Model::ConvexSelf(f) };
            let x0 = dragon_start(11.0, 1.0 / 2f64.sqrt());
            Ok((Problem::new(model, FeasibleSet::AllSpace, x0)?, cfg))
        }
        "l1box" => {
            let f = Arc::new(MaxAffine::weighted_l1(&[1.0, 2.0]));
            let p = Problem::new(Model::Standard(f), FeasibleSet::cube(2, 2.0), vec![1.5, 1.0])?;
            Ok((p, SolverConfig::default()))
        }
        path => {
            let text = read_file(path)?;
            let file: ProblemFile =
                serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("{path}: {e}")))?;
            let f = Arc::new(match file.objective {
                ObjectiveSpec::MaxAffine(p) => MaxAffine::new(p)?,
                ObjectiveSpec::WeightedL1(w) => MaxAffine::weighted_l1(&w),
            });
            let model = match file.model {
                ModelKind::Standard => Model::Standard(f),
                ModelKind::ConvexSelf => Model::ConvexSelf(f),
            };
            let p = Problem::new(model, file.feasible, file.x0)?;
            Ok((p, file.solver.unwrap_or_default()))
        }
    }
}

fn load_plant(name: &str) -> Result<LftPlant> {
    match name {
        "scalar" => {
            let s = |v| DMatrix::from_element(1, 1, v);
            LftPlant::uncertain_matrix(s(-1.0), s(1.0), s(1.0), s(0.0), vec![1])
        }
        path => LftPlant::from_json_str(&read_file(path)?).map_err(|e| match e {
            Error::InvalidInput(m) => Error::InvalidInput(format!("{path}: {m}")),
            other => other,
        }),
    }
}

fn write_outputs(out: Option<&Path>, report: &str, files: &[(&str, String)]) -> Result<()> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join("report.json"), report)?;
            for (name, body) in files {
                fs::write(dir.join(name), body)?;
            }
            println!("{report}");
        }
        None => println!("{report}"),
    }
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report is plain data")
}

#[derive(Serialize)]
struct ConfigReport {
    mode: Mode,
    norm: Norm,
    gamma: F,
    gamma_tilde: F,
    #[serde(rename = "Gamma")]
    big_gamma: F,
    theta: F,
    #[serde(rename = "M")]
    m_factor: F,
    r_init: F,
    tol1: F,
    tol2: F,
    tol3: F,
    k_max: usize,
    nu_max: usize,
    max_serious: usize,
}

impl From<&SolverConfig> for ConfigReport {
    fn from(c: &SolverConfig) -> Self {
        Self {
            mode: c.mode,
            norm: c.norm,
            gamma: F(c.gamma),
            gamma_tilde: F(c.gamma_tilde),
            big_gamma: F(c.big_gamma),
            theta: F(c.theta),
            m_factor: F(c.m_factor),
            r_init: F(c.r_init),
            tol1: F(c.tol1),
            tol2: F(c.tol2),
            tol3: F(c.tol3),
            k_max: c.k_max,
            nu_max: c.nu_max,
            max_serious: c.max_serious,
        }
    }
}

#[derive(Serialize)]
struct SolveReport {
    command: &'static str,
    task: &'static str,
    problem: String,
    seed: u64,
    status: Status,
    /// Task value: `f` for `min`, the worst-case value, or `d*`.
    value: F,
    x_final: Vec<F>,
    f_final: F,
    serious_steps: usize,
    null_steps: usize,
    g_norm: F,
    config: ConfigReport,
}

fn task_name(t: Task) -> &'static str {
    match t {
        Task::Min => "min",
        Task::WcAlpha => "wc-alpha",
        Task::WcHinf => "wc-hinf",
        Task::Distance => "distance",
    }
}

fn exit_code(status: Status) -> i32 {
    match status {
        Status::Critical => 0,
        Status::InnerStall | Status::BudgetExhausted => 2,
    }
}

fn cmd_solve(a: &SolveArgs) -> Result<i32> {
    let (value, run, cfg): (f64, SolveResult, SolverConfig) = match a.task {
        Task::Min => {
            let (problem, mut cfg) = load_problem(&a.problem, &a.solver)?;
            a.solver.apply(&mut cfg);
            let r = outer_solve(&problem, &cfg)?;
            (r.f_final, r, cfg)
        }
        Task::WcAlpha | Task::WcHinf => {
            let plant = load_plant(&a.problem)?;
            let mut cfg = SolverConfig::default();
            a.solver.apply(&mut cfg);
            let starts = box_starts(plant.n_params(), a.starts, a.seed);
            let wc = if a.task == Task::WcAlpha {
                worst_case_alpha(&plant, &starts, &cfg)?
            } else {
                worst_case_hinf(&plant, &starts, &cfg)?
            };
            let r = wc.runs[wc.start].clone();
            (wc.value, r, cfg)
        }
        Task::Distance => {
            let plant = load_plant(&a.problem)?;
            let mut cfg = SolverConfig::default();
            a.solver.apply(&mut cfg);
            let d = distance_to_instability(&plant, &cfg)?;
            (d.d_star, d.solve, cfg)
        }
    };
    let report = SolveReport {
        command: "solve",
        task: task_name(a.task),
        problem: a.problem.clone(),
        seed: a.seed,
        status: run.status,
        value: F(value),
        x_final: fv(&run.x_final),
        f_final: F(run.f_final),
        serious_steps: run.serious_steps,
        null_steps: run.trace.nulls().count(),
        g_norm: F(run.g_norm),
        config: ConfigReport::from(&cfg),
    };
    let trace = run.trace.to_csv_string()?;
    write_outputs(a.out.as_deref(), &to_json(&report), &[("trace.csv", trace)])?;
    Ok(exit_code(run.status))
}

#[derive(Serialize)]
struct CertifyReport {
    command: &'static str,
    task: &'static str,
    method: &'static str,
    problem: String,
    seed: u64,
    /// Solver value (lower bound for worst-case tasks, `d*` for distance).
    solver_value: F,
    /// Certifier maximum (worst-case tasks only).
    certified_value: Option<F>,
    gap: Option<F>,
    verdict: Option<Verdict>,
    gamma_conf: Option<F>,
    alpha_under: Option<F>,
    alpha_over: Option<F>,
    evaluations: Option<usize>,
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Zheng => "zheng",
        Method::Grid => "grid",
    }
}

fn cmd_certify(a: &CertifyArgs) -> Result<i32> {
    let plant = load_plant(&a.problem)?;
    let m = plant.n_params();
    let mut cfg = SolverConfig::default();
    a.solver.apply(&mut cfg);
    let zcfg = ZhengConfig {
        seed: a.seed,
        ..ZhengConfig::default()
    };
    let (lo, hi) = (vec![-1.0; m], vec![1.0; m]);
    let mut report = CertifyReport {
        command: "certify",
        task: task_name(a.task),
        method: method_name(a.method),
        problem: a.problem.clone(),
        seed: a.seed,
        solver_value: F(f64::NAN),
        certified_value: None,
        gap: None,
        verdict: None,
        gamma_conf: None,
        alpha_under: None,
        alpha_over: None,
        evaluations: None,
    };
    let mut code = 0;
    match a.task {
        Task::Min => return Err(Error::InvalidInput("certify needs --task wc-alpha, wc-hinf or distance".into())),
        Task::WcAlpha | Task::WcHinf => {
            let alpha = |d: &[f64]| spectral_abscissa_value(&plant.closed_loop_a(d)?);
            let hinf = |d: &[f64]| hinf_value(&plant, d);
            let f: &crate::certify::BoxFn = if a.task == Task::WcAlpha { &alpha } else { &hinf };
            let (value, evals) = match a.method {
                Method::Grid => {
                    let g = grid_certify_refined(f, &lo, &hi, a.step, a.fine)?;
                    (g.max_value, g.evaluations)
                }
                Method::Zheng => {
                    let z = zheng_maximize(f, &lo, &hi, &zcfg)?;
                    (z.alpha_star, z.iterations * zcfg.samples_per_dim * m)
                }
            };
            let starts = box_starts(m, a.starts, a.seed);
            let wc = if a.task == Task::WcAlpha {
                worst_case_alpha(&plant, &starts, &cfg)?
            } else {
                worst_case_hinf(&plant, &starts, &cfg)?
            };
            report.solver_value = F(wc.value);
            report.certified_value = Some(F(value));
            report.gap = Some(F(value - wc.value));
            report.evaluations = Some(evals);
        }
        Task::Distance => {
            let d_star = match a.dstar {
                Some(d) => d,
                None => distance_to_instability(&plant, &cfg)?.d_star,
            };
            report.solver_value = F(d_star);
            report.gamma_conf = Some(F(a.gamma_conf));
            let (verdict, under, over) = match a.method {
                Method::Zheng => {
                    let d = stability_decision(&plant, d_star, a.gamma_conf, &zcfg)?;
                    (d.verdict, d.alpha_under, d.alpha_over)
                }
                Method::Grid => grid_decision(&plant, d_star, a.gamma_conf, a.step, a.fine)?,
            };
            report.verdict = Some(verdict);
            report.alpha_under = Some(F(under));
            report.alpha_over = Some(F(over));
            if verdict != Verdict::Certified {
                code = 2;
            }
        }
    }
    let json = to_json(&report);
    write_outputs(a.out.as_deref(), &json, &[])?;
    if let Some(v) = report.verdict {
        eprintln!(
            "{}",
            match v {
                Verdict::Certified => "certified".to_string(),
                Verdict::Refuted(Side::Under) => "refuted: unstable inside the shrunk box".to_string(),
                Verdict::Refuted(Side::Over) => "refuted: the enlarged box is still stable".to_string(),
            }
        );
    }
    Ok(code)
}

/// The stability decision with the exhaustive grid as the maximiser.
fn grid_decision(plant: &LftPlant, d_star: f64, gamma: f64, step: f64, fine: f64) -> Result<(Verdict, f64, f64)> {
    if !(d_star > 0.0 && gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidInput("need d* > 0 and 0 < gamma < 1".into()));
    }
    let m = plant.n_params();
    let f = |d: &[f64]| spectral_abscissa_value(&plant.closed_loop_a(d)?);
    let max_on = |s: f64| -> Result<f64> {
        // spacing scales with the box so both boxes get the same resolution
        Ok(grid_certify_refined(&f, &vec![-s; m], &vec![s; m], step * s, fine * s)?.max_value)
    };
    let under = max_on((1.0 - gamma) * d_star)?;
    let over = max_on((1.0 + gamma) * d_star)?;
    let verdict = if under >= 0.0 {
        Verdict::Refuted(Side::Under)
    } else if over <= 0.0 {
        Verdict::Refuted(Side::Over)
    } else {
        Verdict::Certified
    };
    Ok((verdict, under, over))
}

#[derive(Serialize)]
struct RunSummary {
    status: Status,
    serious_steps: usize,
    x_final: Vec<F>,
    f_final: F,
    g_norm: F,
}

impl From<&SolveResult> for RunSummary {
    fn from(r: &SolveResult) -> Self {
        Self {
            status: r.status,
            serious_steps: r.serious_steps,
            x_final: fv(&r.x_final),
            f_final: F(r.f_final),
            g_norm: F(r.g_norm),
        }
    }
}

#[derive(Serialize)]
struct DragonReport {
    command: &'static str,
    a: F,
    x1: F,
    gamma: F,
    #[serde(rename = "Gamma")]
    big_gamma: F,
    r_a: F,
    r_b: F,
    /// Absent when `gamma <= 5/13`.
    r_gamma: Option<F>,
    f_a: F,
    f_b: F,
    rho_at_r_b: F,
    classical: RunSummary,
    bundle: RunSummary,
    verdict: String,
}

/// `mode,j,x1,x2,f` for the start and each serious iterate.
fn trajectory_csv(out: &mut String, mode: &str, x0: &[f64], f0: f64, r: &SolveResult) {
    out.push_str(&format!("{mode},0,{},{},{}\n", fmt_float(x0[0]), fmt_float(x0[1]), fmt_float(f0)));
    for t in r.trace.serious() {
        out.push_str(&format!(
            "{mode},{},{},{},{}\n",
            t.j,
            fmt_float(t.x[0]),
            fmt_float(t.x[1]),
            fmt_float(t.f)
        ));
    }
}

fn cmd_dragon(a: &DragonArgs) -> Result<i32> {
    let x1 = a.x1.unwrap_or(a.a / 11.0 / 2f64.sqrt());
    if !(a.a > 0.0 && x1 > 0.0 && x1 <= a.a / 11.0) {
        return Err(Error::InvalidInput("need a > 0 and 0 < x1 <= a/11".into()));
    }
    let r_a = x1 / 2.0;
    let r_b = 7.0 * x1 / 27.0 + a.a / 27.0;
    let q = dragon_quantities(a.a, x1, a.gamma).ok();
    let x0 = dragon_start(a.a, x1);
    let f = Arc::new(dragon_function());
    let f0 = f.eval(&x0);

    let classical_cfg = SolverConfig {
        gamma: a.gamma,
        gamma_tilde: a.gamma_tilde,
        big_gamma: a.big_gamma,
        norm: Norm::L2,
        mode: Mode::Classical,
        max_serious: a.max_serious,
        ..SolverConfig::default()
    };
    let bundle_cfg = SolverConfig {
        norm: Norm::Inf,
        mode: Mode::Bundle,
        ..classical_cfg.clone()
    };
    let classical = outer_solve(
        &Problem::new(Model::Standard(f.clone()), FeasibleSet::AllSpace, x0.clone())?,
        &classical_cfg,
    )?;
    let bundle = outer_solve(
        &Problem::new(Model::ConvexSelf(f.clone()), FeasibleSet::AllSpace, x0.clone())?,
        &bundle_cfg,
    )?;

    let stalled = classical.status != Status::Critical && classical.f_final >= 0.0;
    let reached = bundle.f_final <= -100.0 + 1e-4;
    let classical_part = if a.gamma <= 198.0 / 234.0 {
        format!(
            "classical: no stall guarantee for gamma <= 198/234 (ended {} at f = {:.6})",
            classical.status.as_str(),
            classical.f_final
        )
    } else if stalled {
        format!(
            "classical: stalled at non-critical point ({:.3e}, {:.6})",
            classical.x_final[0], classical.x_final[1]
        )
    } else {
        format!("classical: ended {} at f = {:.6}", classical.status.as_str(), classical.f_final)
    };
    let bundle_part = if reached {
        "bundle: reached global minimum -100".to_string()
    } else {
        format!("bundle: ended {} at f = {:.6}", bundle.status.as_str(), bundle.f_final)
    };
    let verdict = format!("{classical_part} / {bundle_part}");

    let report = DragonReport {
        command: "dragon",
        a: F(a.a),
        x1: F(x1),
        gamma: F(a.gamma),
        big_gamma: F(a.big_gamma),
        r_a: F(r_a),
        r_b: F(r_b),
        r_gamma: q.map(|q| F(q.r_gamma)),
        f_a: F(a.a - 13.0 * x1 / 2.0),
        f_b: F(-143.0 * x1 / 27.0 + 22.0 * a.a / 27.0),
        rho_at_r_b: F(dragon_rho(a.a, x1, r_b)),
        classical: RunSummary::from(&classical),
        bundle: RunSummary::from(&bundle),
        verdict: verdict.clone(),
    };

    let mut traj = String::from("mode,j,x1,x2,f\n");
    trajectory_csv(&mut traj, "classical", &x0, f0, &classical);
    trajectory_csv(&mut traj, "bundle", &x0, f0, &bundle);
    let mut files = vec![("trajectories.csv", traj)];
    if a.emit_polygon {
        let mut poly = String::from("level,vertex,x1,x2\n");
        let mut levels = vec![f0];
        levels.extend(classical.trace.serious().map(|t| t.f).filter(|v| *v > 0.0));
        for lv in levels {
            for (i, v) in dragon_polygon(lv).iter().enumerate() {
                poly.push_str(&format!("{},{i},{},{}\n", fmt_float(lv), fmt_float(v[0]), fmt_float(v[1])));
            }
        }
        if a.out.is_none() {
            print!("{poly}");
        }
        files.push(("polygon.csv", poly));
    }
    match &a.out {
        Some(_) => write_outputs(a.out.as_deref(), &to_json(&report), &files)?,
        None => println!("{}", to_json(&report)),
    }
    eprintln!("{verdict}");
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_wrapper_writes_seventeen_digits() {
        let s = serde_json::to_string(&vec![F(0.1), F(f64::NAN)]).unwrap();
        assert_eq!(s, "[1.0000000000000001e-1,null]");
        let back: Vec<Option<f64>> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, vec![Some(0.1), None]);
    }

    #[test]
    fn problem_file_parses() {
        let text = r#"{
            "objective": {"weighted_l1": [1.0, 2.0]},
            "feasible": {"kind": "box", "lower": [-2, -2], "upper": [2, 2]},
            "x0": [1.5, 1.0],
            "solver": {"gamma": 0.001, "gamma_tilde": 0.002}
        }"#;
        let f: ProblemFile = serde_json::from_str(text).unwrap();
        let cfg = f.solver.unwrap();
        assert_eq!(cfg.gamma, 0.001);
        assert_eq!(cfg.k_max, SolverConfig::default().k_max);
    }

    #[test]
    fn flag_beats_file_beats_default() {
        let mut cfg = SolverConfig {
            gamma: 0.001,
            theta: 0.3,
            ..SolverConfig::default()
        };
        let flags = SolverFlags {
            gamma: Some(0.01),
            ..SolverFlags::default()
        };
        flags.apply(&mut cfg);
        assert_eq!((cfg.gamma, cfg.theta, cfg.tol1), (0.01, 0.3, 1e-5));
    }

    #[test]
    fn malformed_file_names_the_field() {
        let e = serde_json::from_str::<ProblemFile>(r#"{"objective": {"weighted_l1": [1]}}"#).unwrap_err();
        assert!(e.to_string().contains("x0"), "{e}");
        assert!(e.to_string().contains("line"), "{e}");
    }
}
