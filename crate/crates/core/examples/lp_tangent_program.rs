//! One tangent program on a hand-built bundle, for each trust-region norm.
//!
//! ```bash
//! cargo run -p nstr --example lp_tangent_program
//! ```

use nstr::tangent::solve_tangent;
use nstr::{Bundle, CuttingPlane, FeasibleSet, Norm, PlaneOrigin};

fn main() -> nstr::Result<()> {
    let x = vec![1.0, 1.0];
    // f(x) = 3 with two more planes anchored at x
    let planes = vec![
        CuttingPlane::exactness(3.0, vec![1.0, 2.0]),
        CuttingPlane::new(2.5, vec![-1.0, 1.0], PlaneOrigin::NullStep(vec![0.0, 1.0]), 1),
        CuttingPlane::new(2.0, vec![0.5, -2.0], PlaneOrigin::NullStep(vec![1.0, 0.0]), 2),
    ];
    let b = Bundle::from_planes(x.clone(), 3.0, planes, 10)?;
    let box_c = FeasibleSet::new_box(vec![0.95, 0.0], vec![2.0, 2.0])?;

    for (norm, c) in [(Norm::Inf, &box_c), (Norm::L1, &box_c), (Norm::Inf, &FeasibleSet::AllSpace)] {
        let s = solve_tangent(&b, c, 0.1, norm)?;
        println!(
            "{norm:?}: y* = {:?}  phi = {:.6}  lambda = {:?}  tr active = {}  gap = {:.1e}",
            s.y_star, s.model_value, s.multipliers, s.tr_active, s.duality_gap
        );
    }

    // the euclidean program is closed form and takes the exactness plane alone
    let single = Bundle::new(x, 3.0, CuttingPlane::exactness(3.0, vec![1.0, 2.0]), 10)?;
    let s = solve_tangent(&single, &FeasibleSet::AllSpace, 0.1, Norm::L2)?;
    println!("L2: y* = {:?}  phi = {:.6}", s.y_star, s.model_value);
    Ok(())
}
