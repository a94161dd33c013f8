//! Parametric gradients of the spectral abscissa and the H-infinity norm
//! against central differences on random plants.

use nstr::bench::random_lft_instance;
use nstr::control::{alpha_gradient, hinf_gradient, hinf_value, spectral_abscissa_value, LftPlant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn central(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut p = x.to_vec();
            let mut m = x.to_vec();
            p[i] += h;
            m[i] -= h;
            (f(&p) - f(&m)) / (2.0 * h)
        })
        .collect()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(1e-8)
}

fn alpha(p: &LftPlant, d: &[f64]) -> f64 {
    spectral_abscissa_value(&p.closed_loop_a(d).unwrap()).unwrap()
}

#[test]
fn alpha_gradient_matches_differences() {
    let mut checked = 0;
    for seed in 0..20u64 {
        let plant = random_lft_instance(3, 5, seed, seed % 2 == 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d: Vec<f64> = (0..3).map(|_| rng.random_range(-0.8..0.8)).collect();
        let g = alpha_gradient(&plant, &d).unwrap();
        // differences are meaningless across an eigenvalue crossing
        if g.degenerate {
            continue;
        }
        let fd = central(&|x| alpha(&plant, x), &d, 1e-6);
        let e = rel_err(&g.grad, &fd);
        assert!(e < 1e-5, "seed {seed}: analytic {:?} vs fd {fd:?} ({e:e})", g.grad);
        checked += 1;
    }
    assert!(checked >= 15, "only {checked} simple points");
}

#[test]
fn hinf_gradient_matches_differences() {
    let mut checked = 0;
    for seed in 0..12u64 {
        let plant = random_lft_instance(2, 4, 100 + seed, true).unwrap();
        let d = [0.2, -0.3];
        if alpha(&plant, &d) >= -1e-3 {
            continue;
        }
        let g = hinf_gradient(&plant, &d).unwrap();
        let fd = central(&|x| hinf_value(&plant, x).unwrap(), &d, 1e-6);
        let e = rel_err(&g.grad, &fd);
        assert!(e < 1e-4, "seed {seed}: analytic {:?} vs fd {fd:?} ({e:e})", g.grad);
        assert!((g.value - hinf_value(&plant, &d).unwrap()).abs() < 1e-9 * g.value);
        checked += 1;
    }
    assert!(checked >= 8, "only {checked} stable points");
}

#[test]
fn scalar_plant_alpha_is_linear() {
    let json = r#"{"A": [[-1.0]], "Bp": [[1.0]], "Cq": [[1.0]], "Dqp": [[0.0]], "structure": [1]}"#;
    let p = LftPlant::from_json_str(json).unwrap();
    for d in [-1.0, -0.25, 0.0, 0.5, 1.0] {
        assert!((alpha(&p, &[d]) - (d - 1.0)).abs() < 1e-14);
        let g = alpha_gradient(&p, &[d]).unwrap();
        assert!((g.grad[0] - 1.0).abs() < 1e-12);
    }
}

#[test]
fn plant_json_errors_point_at_the_problem() {
    let bad_shape = r#"{"A": [[-1.0, 0.0]], "Bp": [[1.0]], "Cq": [[1.0]], "Dqp": [[0.0]], "structure": [1]}"#;
    let e = LftPlant::from_json_str(bad_shape).unwrap_err().to_string();
    assert!(e.contains('A'), "{e}");
    let bad_json = "{\n  \"A\": [[-1.0]],\n  \"Bp\": oops\n}";
    let e = LftPlant::from_json_str(bad_json).unwrap_err().to_string();
    assert!(e.contains("line 3"), "{e}");
}
