//! Worst-case H-infinity norm of a two-parameter plant read from JSON, with
//! an exhaustive grid as the reference.
//!
//! ```bash
//! cargo run --release -p nstr --example worst_case_hinf
//! ```

use nstr::certify::grid_certify_refined;
use nstr::control::{box_starts, hinf_value, worst_case_hinf, LftPlant};
use nstr::SolverConfig;

fn main() -> nstr::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/two_param_plant.json");
    let plant = LftPlant::load(path)?;

    println!("nominal |T|_inf = {:.10}", hinf_value(&plant, &[0.0, 0.0])?);
    let wc = worst_case_hinf(&plant, &box_starts(2, 4, 0), &SolverConfig::default())?;
    println!("solver: {:.10} at delta = {:?}", wc.value, wc.delta);

    let f = |d: &[f64]| hinf_value(&plant, d);
    let g = grid_certify_refined(&f, &[-1.0, -1.0], &[1.0, 1.0], 0.05, 0.005)?;
    println!("grid:   {:.10} at delta = {:?} ({} evaluations)", g.max_value, g.argmax, g.evaluations);
    Ok(())
}
