//! Weighted l1 norm minimised over a box; the solver should stop at the
//! origin with a vanishing aggregate subgradient.
//!
//! ```bash
//! cargo run -p nstr --example convex_l1_box
//! ```

use std::sync::Arc;

use nstr::{outer_solve, FeasibleSet, MaxAffine, Model, Norm, Problem, SolverConfig};

fn main() -> nstr::Result<()> {
    let f = Arc::new(MaxAffine::weighted_l1(&[1.0, 2.0]));
    for norm in [Norm::Inf, Norm::L1] {
        let cfg = SolverConfig {
            norm,
            ..SolverConfig::default()
        };
        for model in [Model::Standard(f.clone()), Model::ConvexSelf(f.clone())] {
            let name = model.name();
            let p = Problem::new(model, FeasibleSet::cube(2, 2.0), vec![1.5, 1.0])?;
            let r = outer_solve(&p, &cfg)?;
            println!(
                "{norm:?} {name:<12} {} in {} serious / {} null steps: x = {:?}, f = {:.3e}",
                r.status.as_str(),
                r.serious_steps,
                r.trace.nulls().count(),
                r.x_final,
                r.f_final
            );
        }
    }
    Ok(())
}
