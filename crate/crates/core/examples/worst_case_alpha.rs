//! Worst-case spectral abscissa over the unit parameter box: multi-start
//! bundle solver against the Monte Carlo certifier.
//!
//! ```bash
//! cargo run --release -p nstr --example worst_case_alpha -- 3
//! ```

use nstr::bench::random_lft_instance;
use nstr::certify::{zheng_maximize, ZhengConfig};
use nstr::control::{box_starts, spectral_abscissa_value, worst_case_alpha};
use nstr::SolverConfig;

fn main() -> nstr::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let plant = random_lft_instance(2, 6, seed, true)?;
    let m = plant.n_params();

    let wc = worst_case_alpha(&plant, &box_starts(m, 4, seed), &SolverConfig::default())?;
    println!("solver:    alpha = {:.10} at delta = {:?} ({} starts)", wc.value, wc.delta, wc.runs.len());

    let f = |d: &[f64]| spectral_abscissa_value(&plant.closed_loop_a(d)?);
    let z = zheng_maximize(&f, &vec![-1.0; m], &vec![1.0; m], &ZhengConfig::default())?;
    println!("certifier: alpha = {:.10} after {} level updates", z.alpha_star, z.iterations);
    println!("gap = {:.3e}", z.alpha_star - wc.value);
    Ok(())
}
