//! Composite objective `|F(x)|_1` with a smooth nonlinear `F`, solved with the
//! natural model that linearises `F` inside the outer max.
//!
//! ```bash
//! cargo run -p nstr --example natural_model
//! ```

use std::sync::Arc;

use nstr::{outer_solve, FeasibleSet, MaxAffine, Model, Problem, SmoothMap, SolverConfig};

/// Rosenbrock residuals `(10 (x2 - x1^2), 1 - x1)`; zero only at `(1, 1)`.
struct Residuals;

impl SmoothMap for Residuals {
    fn dim_in(&self) -> usize {
        2
    }
    fn dim_out(&self) -> usize {
        2
    }
    fn eval(&self, x: &[f64]) -> nstr::Result<Vec<f64>> {
        Ok(vec![10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0]])
    }
    fn jacobian(&self, x: &[f64]) -> nstr::Result<Vec<Vec<f64>>> {
        Ok(vec![vec![-20.0 * x[0], 10.0], vec![-1.0, 0.0]])
    }
}

fn main() -> nstr::Result<()> {
    let model = Model::Natural {
        outer: MaxAffine::weighted_l1(&[1.0, 1.0]),
        inner: Arc::new(Residuals),
    };
    let p = Problem::new(model, FeasibleSet::AllSpace, vec![-1.2, 1.0])?;
    let r = outer_solve(&p, &SolverConfig::default())?;
    println!(
        "{} after {} serious steps: x = ({:.8}, {:.8}), f = {:.3e}",
        r.status.as_str(),
        r.serious_steps,
        r.x_final[0],
        r.x_final[1],
        r.f_final
    );
    for t in r.trace.serious().step_by(5) {
        println!("  j = {:>3}  f = {:.6e}  R = {:.3e}", t.j, t.f, t.radius);
    }
    Ok(())
}
