//! Randomised invariants of models, tangent programs and solver runs.

use std::sync::Arc;

use nstr::bench::random_polyhedral;
use nstr::bundle::Bundle;
use nstr::tangent::solve_tangent;
use nstr::{outer_solve, CuttingPlane, FeasibleSet, Model, Norm, Oracle, Problem, SolverConfig, StepKind};
use proptest::prelude::*;

fn point(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, n)
}

fn models(seed: u64) -> Vec<Model> {
    let f = Arc::new(random_polyhedral(2, 4, seed));
    vec![Model::Standard(f.clone()), Model::ConvexSelf(f)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn model_is_exact_at_anchor(seed in 0u64..50, x in point(2)) {
        for m in models(seed) {
            let fx = m.objective(&x).unwrap();
            prop_assert!((m.eval(&x, &x).unwrap() - fx).abs() <= 1e-12 * (1.0 + fx.abs()));
        }
    }

    #[test]
    fn model_is_convex_in_y(seed in 0u64..50, x in point(2), y1 in point(2), y2 in point(2), t in 0.0..1.0f64) {
        let mid: Vec<f64> = y1.iter().zip(&y2).map(|(a, b)| t * a + (1.0 - t) * b).collect();
        for m in models(seed) {
            let lhs = m.eval(&mid, &x).unwrap();
            let rhs = t * m.eval(&y1, &x).unwrap() + (1.0 - t) * m.eval(&y2, &x).unwrap();
            prop_assert!(lhs <= rhs + 1e-10 * (1.0 + rhs.abs()));
        }
    }

    // for a convex f the standard model never overestimates
    #[test]
    fn standard_model_minorises_convex_f(seed in 0u64..50, x in point(2), y in point(2)) {
        let f = random_polyhedral(2, 4, seed);
        let m = Model::Standard(Arc::new(f.clone()));
        prop_assert!(m.eval(&y, &x).unwrap() <= f.eval(&y) + 1e-10);
    }

    #[test]
    fn cutting_plane_is_tangent_minorant(seed in 0u64..50, x in point(2), z in point(2), y in point(2)) {
        for m in models(seed) {
            let p = m.cut(&x, &z, 1).unwrap();
            let at_z = p.eval(&z, &x).unwrap();
            prop_assert!((at_z - m.eval(&z, &x).unwrap()).abs() <= 1e-10 * (1.0 + at_z.abs()));
            prop_assert!(p.eval(&y, &x).unwrap() <= m.eval(&y, &x).unwrap() + 1e-10);
        }
    }

    #[test]
    fn tangent_solution_is_feasible_and_no_worse(
        seed in 0u64..50,
        z1 in point(2),
        z2 in point(2),
        radius in 0.01..2.0f64,
        l1 in any::<bool>(),
    ) {
        let f = Arc::new(random_polyhedral(2, 4, seed));
        let m = Model::Standard(f.clone());
        let x = vec![0.5, -0.25];
        let fx = f.value(&x).unwrap();
        let mut b = Bundle::new(x.clone(), fx, m.cut(&x, &x, 0).unwrap(), 10).unwrap();
        for (k, z) in [z1, z2].iter().enumerate() {
            b.add(m.cut(&x, z, k + 1).unwrap(), &x).unwrap();
        }
        let c = FeasibleSet::cube(2, 1.0);
        let norm = if l1 { Norm::L1 } else { Norm::Inf };
        let s = solve_tangent(&b, &c, radius, norm).unwrap();
        prop_assert!(c.contains(&s.y_star, 1e-9));
        prop_assert!(norm.dist(&s.y_star, &x) <= radius * (1.0 + 1e-9));
        prop_assert!(s.model_value <= fx + 1e-9 * (1.0 + fx.abs()));
        let lsum: f64 = s.multipliers.iter().sum();
        prop_assert!(s.multipliers.iter().all(|&l| l >= -1e-12));
        prop_assert!((lsum - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn bundle_stays_within_capacity(seed in 0u64..50, zs in prop::collection::vec(point(2), 1..20)) {
        let f = Arc::new(random_polyhedral(2, 4, seed));
        let m = Model::Standard(f.clone());
        let x = vec![0.0, 0.0];
        let mut b = Bundle::new(x.clone(), f.eval(&x), CuttingPlane::exactness(f.eval(&x), m.cut_pair(&x, &x).unwrap().1), 4).unwrap();
        for (k, z) in zs.iter().enumerate() {
            b.add(m.cut(&x, z, k + 1).unwrap(), &x).unwrap();
            b.prune();
            prop_assert!(b.len() <= b.max_planes());
            prop_assert!(b.has_exactness_plane());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // serious steps satisfy f(x+) <= f(x) - gamma (f(x) - phi(z))
    #[test]
    fn serious_steps_satisfy_descent(seed in 0u64..1000, x0 in point(2), bundle_mode in any::<bool>()) {
        let f = Arc::new(random_polyhedral(2, 5, seed));
        let model = if bundle_mode { Model::ConvexSelf(f) } else { Model::Standard(f) };
        let p = Problem::new(model, FeasibleSet::cube(2, 4.0), x0).unwrap();
        let cfg = SolverConfig::default();
        let r = outer_solve(&p, &cfg).unwrap();
        for t in &r.trace.records {
            if t.kind == StepKind::Serious {
                let pred = t.f_anchor - t.model_z;
                prop_assert!(t.f <= t.f_anchor - cfg.gamma * pred + 1e-12 * (1.0 + t.f_anchor.abs()));
                prop_assert!(t.rho >= cfg.gamma);
            }
        }
        let mut prev = f64::INFINITY;
        for t in r.trace.serious() {
            prop_assert!(t.f < prev);
            prev = t.f;
        }
        prop_assert!(p.feasible.contains(&r.x_final, 1e-9));
    }
}
