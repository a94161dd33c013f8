//! Dense eigen, solve and SVD kernels on top of nalgebra.

use nalgebra::{Complex, DMatrix, DVector, Schur};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

const SCHUR_EPS: f64 = 1e-15;
const SCHUR_MAX_ITER: usize = 10_000;

/// An eigenvalue with unit right eigenvector `v` (`A v = lambda v`) and unit
/// left eigenvector `u` (`u^H A = lambda u^H`).
#[derive(Debug, Clone, PartialEq)]
pub struct EigenTriple {
    pub value: C64,
    pub right: CVec,
    pub left: CVec,
}

pub fn to_complex(a: &DMatrix<f64>) -> CMat {
    a.map(|v| C64::new(v, 0.0))
}

fn check_square(a: &DMatrix<f64>) -> Result<()> {
    if a.nrows() != a.ncols() || a.nrows() == 0 {
        return Err(Error::InvalidInput(format!(
            "expected a nonempty square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite matrix entry".into()));
    }
    Ok(())
}

fn sort_desc(vals: &mut [C64]) {
    vals.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
}

/// Eigenvalues of a real square matrix, by descending real part, ties by
/// descending imaginary part.
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<C64>> {
    check_square(a)?;
    let schur = Schur::try_new(a.clone(), SCHUR_EPS, SCHUR_MAX_ITER).ok_or(Error::NoConvergence)?;
    let mut vals: Vec<C64> = schur.complex_eigenvalues().iter().copied().collect();
    sort_desc(&mut vals);
    Ok(vals)
}

/// Unit null vector of `m - shift I` by inverse iteration.
fn inverse_iteration(m: &CMat, shift: C64, scale: f64) -> Result<CVec> {
    let n = m.nrows();
    let mut b = CVec::from_fn(n, |i, _| C64::new(1.0 + 0.1 * i as f64, 0.05 * i as f64));
    let mut eps = 1e-14 * scale;
    for _ in 0..6 {
        let s = shift + C64::new(eps, eps);
        let shifted = m - CMat::identity(n, n) * s;
        let lu = shifted.lu();
        let mut ok = true;
        for _ in 0..3 {
            match lu.solve(&b) {
                Some(x) if x.iter().all(|v| v.re.is_finite() && v.im.is_finite()) => {
                    let nrm = x.norm();
                    if nrm == 0.0 {
                        ok = false;
                        break;
                    }
                    b = x / C64::new(nrm, 0.0);
                }
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Ok(b);
        }
        eps *= 100.0;
    }
    Err(Error::NoConvergence)
}

/// Full eigendecomposition with left and right eigenvectors.
pub fn eig_dense(a: &DMatrix<f64>) -> Result<Vec<EigenTriple>> {
    let vals = eigenvalues(a)?;
    let ac = to_complex(a);
    let at = ac.transpose();
    let scale = 1.0 + a.norm();
    vals.into_iter()
        .map(|lambda| {
            let right = inverse_iteration(&ac, lambda, scale)?;
            // u^H A = lambda u^H  <=>  A^T conj(u) = lambda conj(u)
            let left = inverse_iteration(&at, lambda, scale)?.map(|v| v.conj());
            Ok(EigenTriple {
                value: lambda,
                right,
                left,
            })
        })
        .collect()
}

/// `X` with `A X = B`, via LU with partial pivoting.
pub fn solve_complex(a: &CMat, b: &CMat) -> Result<CMat> {
    if a.nrows() != a.ncols() {
        return Err(Error::InvalidInput("solve_complex needs a square matrix".into()));
    }
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: b.nrows(),
        });
    }
    let lu = a.clone().lu();
    let u = lu.u();
    let diag_max = u.diagonal().iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let diag_min = u.diagonal().iter().fold(f64::INFINITY, |m, v| m.min(v.norm()));
    if a.nrows() > 0 && (diag_max == 0.0 || diag_min <= 1e-14 * diag_max) {
        return Err(Error::Singular);
    }
    lu.solve(b).ok_or(Error::Singular)
}

/// Real counterpart of [`solve_complex`].
pub fn solve_real(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let x = solve_complex(&to_complex(a), &to_complex(b))?;
    Ok(x.map(|v| v.re))
}

/// Largest singular value with unit singular vectors: `G v = sigma u`.
pub fn svd_top(g: &CMat) -> (f64, CVec, CVec) {
    let (m, n) = g.shape();
    if m == 0 || n == 0 {
        return (0.0, CVec::zeros(m), CVec::zeros(n));
    }
    let svd = g.clone().svd(true, true);
    let (i, sigma) = svd
        .singular_values
        .iter()
        .copied()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty");
    let u = svd.u.as_ref().expect("requested").column(i).into_owned();
    let v = svd.v_t.as_ref().expect("requested").row(i).adjoint();
    (sigma, u, v)
}

pub fn sigma_max(g: &CMat) -> f64 {
    svd_top(g).0
}
