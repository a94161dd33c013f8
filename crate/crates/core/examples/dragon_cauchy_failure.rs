//! Steepest-descent (Cauchy) steps stall on a convex polyhedral function
//! while cutting planes reach its minimum from the same start.
//!
//! ```bash
//! cargo run -p nstr --example dragon_cauchy_failure
//! ```

use std::sync::Arc;

use nstr::bench::{dragon_function, dragon_quantities, dragon_rho, dragon_start};
use nstr::{outer_solve, FeasibleSet, Mode, Model, Norm, Problem, SolverConfig};

fn main() -> nstr::Result<()> {
    let a = 11.0;
    let x1 = a / 11.0 / 2f64.sqrt();
    let gamma = 0.9;

    let q = dragon_quantities(a, x1, gamma)?;
    println!("start x = {:?}", dragon_start(a, x1));
    println!("r_A = {:.6}  r_B = {:.6}  r_gamma = {:.6}", q.r_a, q.r_b, q.r_gamma);
    for r in [q.r_a, q.r_b, 2.0 * q.r_b] {
        println!("rho({r:.4}) = {:.6}", dragon_rho(a, x1, r));
    }

    let f = Arc::new(dragon_function());
    let classical = SolverConfig {
        gamma,
        gamma_tilde: 0.95,
        big_gamma: 1.0,
        norm: Norm::L2,
        mode: Mode::Classical,
        max_serious: 500,
        ..SolverConfig::default()
    };
    let p = Problem::new(Model::Standard(f.clone()), FeasibleSet::AllSpace, dragon_start(a, x1))?;
    let r = outer_solve(&p, &classical)?;
    println!(
        "classical: {} after {} serious steps, x = {:?}, f = {:.6}, |g| = {:.6}",
        r.status.as_str(),
        r.serious_steps,
        r.x_final,
        r.f_final,
        r.g_norm
    );

    let bundle = SolverConfig {
        norm: Norm::Inf,
        mode: Mode::Bundle,
        max_serious: 300,
        ..classical
    };
    let p = Problem::new(Model::ConvexSelf(f), FeasibleSet::AllSpace, dragon_start(a, x1))?;
    let r = outer_solve(&p, &bundle)?;
    println!(
        "bundle:    {} after {} serious steps, x = {:?}, f = {:.6}",
        r.status.as_str(),
        r.serious_steps,
        r.x_final,
        r.f_final
    );
    Ok(())
}
