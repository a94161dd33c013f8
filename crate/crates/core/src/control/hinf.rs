//! H-infinity norm of a stable state-space system by level-set iteration on
//! the imaginary-axis eigenvalues of the associated Hamiltonian matrix.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, sigma_max, solve_complex, solve_real, svd_top, to_complex, CMat, CVec, C64};

use super::spectral_abscissa_value;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HinfNorm {
    pub value: f64,
    /// A peak frequency; `f64::INFINITY` when the supremum is the feedthrough.
    pub omega: f64,
}

/// `G(j omega) = C (j omega I - A)^-1 B + D`.
pub fn freq_response(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, d: &DMatrix<f64>, omega: f64) -> Result<CMat> {
    if omega.is_infinite() {
        return Ok(to_complex(d));
    }
    let n = a.nrows();
    let sia = CMat::identity(n, n) * C64::new(0.0, omega) - to_complex(a);
    Ok(to_complex(c) * solve_complex(&sia, &to_complex(b))? + to_complex(d))
}

/// Top singular triple of `G(j omega)`.
pub fn peak_direction(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, d: &DMatrix<f64>, omega: f64) -> Result<(f64, CVec, CVec)> {
    Ok(svd_top(&freq_response(a, b, c, d, omega)?))
}

/// Nonnegative imaginary parts of the (numerically) imaginary eigenvalues of
/// the Hamiltonian at level `gamma > sigma_max(D)`.
fn imaginary_crossings(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, d: &DMatrix<f64>, gamma: f64) -> Result<Vec<f64>> {
    let n = a.nrows();
    let m = b.ncols();
    let p = c.nrows();
    let r = DMatrix::identity(m, m) * (gamma * gamma) - d.transpose() * d;
    let r_inv = solve_real(&r, &DMatrix::identity(m, m))?;
    let a_h = a + b * &r_inv * d.transpose() * c;
    let g = b * &r_inv * b.transpose();
    let q = -(c.transpose() * (DMatrix::identity(p, p) + d * &r_inv * d.transpose()) * c);
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(&a_h);
    h.view_mut((0, n), (n, n)).copy_from(&g);
    h.view_mut((n, 0), (n, n)).copy_from(&q);
    h.view_mut((n, n), (n, n)).copy_from(&(-a_h.transpose()));
    let scale = 1.0 + h.norm();
    let mut w: Vec<f64> = eigenvalues(&h)?
        .into_iter()
        .filter(|l| l.re.abs() <= 1e-8 * scale && l.im >= 0.0)
        .map(|l| l.im)
        .collect();
    w.sort_by(f64::total_cmp);
    w.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
    Ok(w)
}

/// Whether the Hamiltonian at level `gamma` has imaginary-axis eigenvalues.
pub fn hamiltonian_has_crossings(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, d: &DMatrix<f64>, gamma: f64) -> Result<bool> {
    Ok(!imaginary_crossings(a, b, c, d, gamma)?.is_empty())
}

/// `||C (sI - A)^-1 B + D||_inf` to relative accuracy `tol`, `A` Hurwitz.
pub fn hinf_norm(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, d: &DMatrix<f64>, tol: f64) -> Result<HinfNorm> {
    let n = a.nrows();
    if b.nrows() != n || c.ncols() != n || d.shape() != (c.nrows(), b.ncols()) {
        return Err(Error::InvalidInput("inconsistent state-space dimensions".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig("tolerance must be positive".into()));
    }
    if n > 0 {
        let alpha = spectral_abscissa_value(a)?;
        if alpha >= 0.0 {
            return Err(Error::Unstable(alpha));
        }
    }
    let sd = sigma_max(&to_complex(d));
    if n == 0 || b.norm() == 0.0 || c.norm() == 0.0 {
        let omega = if sd > 0.0 { f64::INFINITY } else { 0.0 };
        return Ok(HinfNorm { value: sd, omega });
    }

    let sigma = |w: f64| -> Result<f64> { Ok(sigma_max(&freq_response(a, b, c, d, w)?)) };
    let mut best = HinfNorm {
        value: sd,
        omega: f64::INFINITY,
    };
    let consider = |w: f64, best: &mut HinfNorm| -> Result<()> {
        let s = sigma(w)?;
        if s > best.value {
            *best = HinfNorm { value: s, omega: w };
        }
        Ok(())
    };
    consider(0.0, &mut best)?;
    for i in 0..200 {
        let w = 10f64.powf(-4.0 + 8.0 * i as f64 / 199.0);
        consider(w, &mut best)?;
    }
    // Eigenvalue moduli give natural frequencies worth probing too.
    for l in eigenvalues(a)? {
        consider(l.norm(), &mut best)?;
    }

    if best.value == 0.0 {
        return Ok(HinfNorm { value: 0.0, omega: 0.0 });
    }
    for _ in 0..100 {
        let level = best.value * (1.0 + 2.0 * tol);
        let w = imaginary_crossings(a, b, c, d, level)?;
        if w.is_empty() {
            break;
        }
        let before = best.value;
        if w.len() == 1 {
            consider(w[0], &mut best)?;
        }
        for pair in w.windows(2) {
            consider(0.5 * (pair[0] + pair[1]), &mut best)?;
            consider((pair[0] * pair[1]).sqrt(), &mut best)?;
        }
        if best.value <= before * (1.0 + 1e-15) {
            // spurious crossings at the noise floor
            break;
        }
    }
    if best.omega.is_finite() {
        best = golden_refine(&sigma, best)?;
    }
    Ok(best)
}

/// Golden-section maximisation of `sigma` in a small bracket around the peak.
fn golden_refine(sigma: &dyn Fn(f64) -> Result<f64>, start: HinfNorm) -> Result<HinfNorm> {
    let w0 = start.omega;
    let (mut lo, mut hi) = if w0 == 0.0 { (0.0, 1e-4) } else { (w0 / 1.05, w0 * 1.05) };
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = sigma(x1)?;
    let mut f2 = sigma(x2)?;
    for _ in 0..80 {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = sigma(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = sigma(x2)?;
        }
        if hi - lo <= 1e-15 * (1.0 + hi) {
            break;
        }
    }
    let mut best = start;
    for (w, f) in [(x1, f1), (x2, f2)] {
        if f > best.value {
            best = HinfNorm { value: f, omega: w };
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn m(r: usize, c: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(r, c, v)
    }

    #[test]
    fn first_order_lag() {
        let h = hinf_norm(&m(1, 1, &[-2.0]), &m(1, 1, &[1.0]), &m(1, 1, &[1.0]), &m(1, 1, &[0.0]), 1e-10).unwrap();
        assert!((h.value - 0.5).abs() < 1e-10);
        assert!(h.omega < 1e-3);
    }

    #[test]
    fn resonance_peak() {
        let zeta: f64 = 0.1;
        let a = m(2, 2, &[0.0, 1.0, -1.0, -2.0 * zeta]);
        let h = hinf_norm(&a, &m(2, 1, &[0.0, 1.0]), &m(1, 2, &[1.0, 0.0]), &m(1, 1, &[0.0]), 1e-10).unwrap();
        let exact = 1.0 / (2.0 * zeta * (1.0 - zeta * zeta).sqrt());
        assert_relative_eq!(h.value, exact, max_relative = 1e-9);
        assert_relative_eq!(h.omega, (1.0 - 2.0 * zeta * zeta).sqrt(), max_relative = 1e-5);
    }

    #[test]
    fn zero_system_and_unstable() {
        let h = hinf_norm(&m(1, 1, &[-1.0]), &m(1, 1, &[1.0]), &m(1, 1, &[0.0]), &m(1, 1, &[0.0]), 1e-8).unwrap();
        assert_eq!(h.value, 0.0);
        let e = hinf_norm(&m(1, 1, &[1.0]), &m(1, 1, &[1.0]), &m(1, 1, &[1.0]), &m(1, 1, &[0.0]), 1e-8).unwrap_err();
        assert!(matches!(e, Error::Unstable(_)));
    }

    #[test]
    fn certified_bracket_with_feedthrough() {
        let a = m(2, 2, &[-0.5, 2.0, -2.0, -0.5]);
        let b = m(2, 2, &[1.0, 0.0, 0.3, 1.0]);
        let c = m(2, 2, &[1.0, 0.2, 0.0, 1.0]);
        let d = m(2, 2, &[0.1, 0.0, 0.05, 0.2]);
        let h = hinf_norm(&a, &b, &c, &d, 1e-10).unwrap();
        assert!(!hamiltonian_has_crossings(&a, &b, &c, &d, h.value * (1.0 + 1e-6)).unwrap());
        assert!(hamiltonian_has_crossings(&a, &b, &c, &d, h.value * (1.0 - 1e-6)).unwrap());
        // dense sweep never beats the returned value
        for i in 0..2000 {
            let w = 10f64.powf(-3.0 + 6.0 * i as f64 / 1999.0);
            let s = sigma_max(&freq_response(&a, &b, &c, &d, w).unwrap());
            assert!(s <= h.value * (1.0 + 1e-12));
        }
    }
}
