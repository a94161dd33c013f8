//! Level-set global maximisation on a multimodal function, then the
//! stability decision for a computed distance.
//!
//! ```bash
//! cargo run --release -p nstr --example zheng_certify
//! ```

use nstr::certify::{stability_decision, zheng_maximize, ZhengConfig, ZhengMode};
use nstr::control::{distance_to_instability, LftPlant};
use nstr::SolverConfig;

fn main() -> nstr::Result<()> {
    // one tall peak near x = 0.7 and shorter ones at multiples of pi/6
    let f = |x: &[f64]| Ok((-40.0 * (x[0] - 0.7).powi(2)).exp() + 0.3 * (12.0 * x[0]).cos().max(0.0));
    for mode in [ZhengMode::Quadrature1d, ZhengMode::MonteCarlo] {
        let cfg = ZhengConfig {
            mode,
            ..ZhengConfig::default()
        };
        let z = zheng_maximize(&f, &[-1.0], &[1.0], &cfg)?;
        println!("{mode:?}: max {:.8} at {:.6} ({} levels)", z.alpha_star, z.argbest[0], z.iterations);
    }

    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/two_param_plant.json");
    let plant = LftPlant::load(path)?;
    let d = distance_to_instability(&plant, &SolverConfig::default())?;
    for d_star in [d.d_star, 0.8 * d.d_star, 1.2 * d.d_star] {
        let s = stability_decision(&plant, d_star, 0.05, &ZhengConfig::default())?;
        println!(
            "d* = {d_star:.6}: {:?} (alpha under {:+.4e}, over {:+.4e})",
            s.verdict, s.alpha_under, s.alpha_over
        );
    }
    Ok(())
}
