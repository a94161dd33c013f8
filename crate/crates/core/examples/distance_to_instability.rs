//! Smallest box scaling that contains a destabilising parameter, found with
//! the exact penalty program and checked against a bisection on the scale.
//!
//! ```bash
//! cargo run --release -p nstr --example distance_to_instability
//! ```

use nstr::certify::{max_alpha_on_scaled_box, ZhengConfig};
use nstr::control::{distance_to_instability, LftPlant};
use nstr::SolverConfig;

fn main() -> nstr::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/two_param_plant.json");
    let plant = LftPlant::load(path)?;

    let d = distance_to_instability(&plant, &SolverConfig::default())?;
    println!(
        "d* = {:.10}  delta = {:?}  alpha there = {:.2e}  penalty weight = {}",
        d.d_star, d.delta, d.alpha, d.penalty
    );

    // sign change of the worst-case abscissa brackets the distance
    let cfg = ZhengConfig::default();
    let (mut lo, mut hi) = (0.0, 4.0);
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        if max_alpha_on_scaled_box(&plant, mid, &cfg)?.alpha_star < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    println!("bisection: d in [{lo:.6}, {hi:.6}]");
    Ok(())
}
