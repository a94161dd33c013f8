//! LFT plants with real parametric uncertainty
//!
//! ```text
//! x' = A x  + Bp p  + Bw w
//! q  = Cq x + Dqp p + Dqw w
//! z  = Cz x + Dzp p + Dzw w
//! p  = Delta q,   Delta = diag(delta_1 I_r1, ..., delta_m I_rm)
//! ```

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{solve_complex, solve_real, to_complex, CMat, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct LftPlant {
    pub a: DMatrix<f64>,
    pub bp: DMatrix<f64>,
    pub bw: DMatrix<f64>,
    pub cq: DMatrix<f64>,
    pub dqp: DMatrix<f64>,
    pub dqw: DMatrix<f64>,
    pub cz: DMatrix<f64>,
    pub dzp: DMatrix<f64>,
    pub dzw: DMatrix<f64>,
    pub structure: Vec<usize>,
}

/// Closed-loop state-space data of the `w -> z` channel at fixed `delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
}

/// Frequency-domain blocks `P_ij(s)` of the plant seen by `Delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyBlocks {
    pub p11: CMat,
    pub p12: CMat,
    pub p21: CMat,
    pub p22: CMat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
struct PlantFile {
    A: Vec<Vec<f64>>,
    Bp: Vec<Vec<f64>>,
    #[serde(default)]
    Bw: Vec<Vec<f64>>,
    Cq: Vec<Vec<f64>>,
    Dqp: Vec<Vec<f64>>,
    #[serde(default)]
    Dqw: Vec<Vec<f64>>,
    #[serde(default)]
    Cz: Vec<Vec<f64>>,
    #[serde(default)]
    Dzp: Vec<Vec<f64>>,
    #[serde(default)]
    Dzw: Vec<Vec<f64>>,
    structure: Vec<usize>,
}

fn to_matrix(name: &str, rows: &[Vec<f64>], nr: usize, nc: usize) -> Result<DMatrix<f64>> {
    if rows.is_empty() && (nr == 0 || nc == 0) {
        return Ok(DMatrix::zeros(nr, nc));
    }
    if rows.len() != nr || rows.iter().any(|r| r.len() != nc) {
        let got_c = rows.first().map_or(0, |r| r.len());
        return Err(Error::InvalidInput(format!(
            "matrix {name}: expected {nr}x{nc}, got {}x{got_c}",
            rows.len()
        )));
    }
    Ok(DMatrix::from_fn(nr, nc, |i, j| rows[i][j]))
}

fn from_matrix(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// `diag(delta_1 I_r1, ..., delta_m I_rm)`.
pub fn build_delta_matrix(delta: &[f64], structure: &[usize]) -> Result<DMatrix<f64>> {
    if delta.len() != structure.len() {
        return Err(Error::DimensionMismatch {
            expected: structure.len(),
            got: delta.len(),
        });
    }
    let q: usize = structure.iter().sum();
    let mut d = DMatrix::zeros(q, q);
    let mut k = 0;
    for (v, r) in delta.iter().zip(structure) {
        for _ in 0..*r {
            d[(k, k)] = *v;
            k += 1;
        }
    }
    Ok(d)
}

fn block_indicator(structure: &[usize], i: usize) -> DMatrix<f64> {
    let mut e = vec![0.0; structure.len()];
    e[i] = 1.0;
    build_delta_matrix(&e, structure).expect("sizes agree")
}

impl LftPlant {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        a: DMatrix<f64>,
        bp: DMatrix<f64>,
        bw: DMatrix<f64>,
        cq: DMatrix<f64>,
        dqp: DMatrix<f64>,
        dqw: DMatrix<f64>,
        cz: DMatrix<f64>,
        dzp: DMatrix<f64>,
        dzw: DMatrix<f64>,
        structure: Vec<usize>,
    ) -> Result<Self> {
        let p = Self {
            a,
            bp,
            bw,
            cq,
            dqp,
            dqw,
            cz,
            dzp,
            dzw,
            structure,
        };
        p.validate()?;
        Ok(p)
    }

    /// Plant without a performance channel: `A(delta) = A + Bp Delta (I - Dqp Delta)^-1 Cq`.
    pub fn uncertain_matrix(a: DMatrix<f64>, bp: DMatrix<f64>, cq: DMatrix<f64>, dqp: DMatrix<f64>, structure: Vec<usize>) -> Result<Self> {
        let (n, q, p) = (a.nrows(), bp.ncols(), cq.nrows());
        Self::new(
            a,
            bp,
            DMatrix::zeros(n, 0),
            cq,
            dqp,
            DMatrix::zeros(p, 0),
            DMatrix::zeros(0, n),
            DMatrix::zeros(0, q),
            DMatrix::zeros(0, 0),
            structure,
        )
    }

    fn validate(&self) -> Result<()> {
        let n = self.a.nrows();
        let q: usize = self.structure.iter().sum();
        let m1 = self.bw.ncols();
        let p2 = self.cz.nrows();
        let bad = |name: &str, m: &DMatrix<f64>, r: usize, c: usize| -> Result<()> {
            if m.shape() != (r, c) {
                return Err(Error::InvalidInput(format!(
                    "matrix {name}: expected {r}x{c}, got {}x{}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("matrix {name} has non-finite entries")));
            }
            Ok(())
        };
        if self.structure.is_empty() || self.structure.contains(&0) {
            return Err(Error::InvalidInput("structure must list positive block sizes".into()));
        }
        bad("A", &self.a, n, n)?;
        bad("Bp", &self.bp, n, q)?;
        bad("Bw", &self.bw, n, m1)?;
        bad("Cq", &self.cq, q, n)?;
        bad("Dqp", &self.dqp, q, q)?;
        bad("Dqw", &self.dqw, q, m1)?;
        bad("Cz", &self.cz, p2, n)?;
        bad("Dzp", &self.dzp, p2, q)?;
        bad("Dzw", &self.dzw, p2, m1)?;
        Ok(())
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let f: PlantFile = serde_json::from_str(s).map_err(|e| Error::InvalidInput(format!("plant file: {e}")))?;
        let n = f.A.len();
        let q: usize = f.structure.iter().sum();
        let m1 = f.Bw.first().map_or(0, |r| r.len());
        let p2 = f.Cz.len();
        Self::new(
            to_matrix("A", &f.A, n, n)?,
            to_matrix("Bp", &f.Bp, n, q)?,
            to_matrix("Bw", &f.Bw, n, m1)?,
            to_matrix("Cq", &f.Cq, q, n)?,
            to_matrix("Dqp", &f.Dqp, q, q)?,
            to_matrix("Dqw", &f.Dqw, q, m1)?,
            to_matrix("Cz", &f.Cz, p2, n)?,
            to_matrix("Dzp", &f.Dzp, p2, q)?,
            to_matrix("Dzw", &f.Dzw, p2, m1)?,
            f.structure,
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> String {
        let f = PlantFile {
            A: from_matrix(&self.a),
            Bp: from_matrix(&self.bp),
            Bw: from_matrix(&self.bw),
            Cq: from_matrix(&self.cq),
            Dqp: from_matrix(&self.dqp),
            Dqw: from_matrix(&self.dqw),
            Cz: from_matrix(&self.cz),
            Dzp: from_matrix(&self.dzp),
            Dzw: from_matrix(&self.dzw),
            structure: self.structure.clone(),
        };
        serde_json::to_string_pretty(&f).expect("plain data")
    }

    pub fn n_states(&self) -> usize {
        self.a.nrows()
    }

    /// Number of uncertain parameters `m`.
    pub fn n_params(&self) -> usize {
        self.structure.len()
    }

    pub fn has_performance_channel(&self) -> bool {
        self.bw.ncols() > 0 && self.cz.nrows() > 0
    }

    pub fn delta_matrix(&self, delta: &[f64]) -> Result<DMatrix<f64>> {
        build_delta_matrix(delta, &self.structure)
    }

    /// `(I - Dqp Delta)^-1`.
    fn loop_inverse(&self, big_delta: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let q = big_delta.nrows();
        let m = DMatrix::identity(q, q) - &self.dqp * big_delta;
        solve_real(&m, &DMatrix::identity(q, q)).map_err(|_| Error::IllPosed)
    }

    /// `A + Bp Delta (I - Dqp Delta)^-1 Cq`.
    pub fn closed_loop_a(&self, delta: &[f64]) -> Result<DMatrix<f64>> {
        let dl = self.delta_matrix(delta)?;
        let inv = self.loop_inverse(&dl)?;
        Ok(&self.a + &self.bp * dl * inv * &self.cq)
    }

    /// `Bp (I - Delta Dqp)^-1 E_i (I - Dqp Delta)^-1 Cq`.
    pub fn d_a_d_delta(&self, delta: &[f64], i: usize) -> Result<DMatrix<f64>> {
        let (left, right) = self.sandwich(delta, i)?;
        Ok(&self.bp * left * right * &self.cq)
    }

    /// `((I - Delta Dqp)^-1 E_i, (I - Dqp Delta)^-1)`.
    fn sandwich(&self, delta: &[f64], i: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        if i >= self.n_params() {
            return Err(Error::InvalidInput(format!("parameter index {i} out of range")));
        }
        let dl = self.delta_matrix(delta)?;
        let q = dl.nrows();
        let right = self.loop_inverse(&dl)?;
        let left_m = DMatrix::identity(q, q) - &dl * &self.dqp;
        let left = solve_real(&left_m, &block_indicator(&self.structure, i)).map_err(|_| Error::IllPosed)?;
        Ok((left, right))
    }

    /// Closed-loop `(A, B, C, D)` of the performance channel.
    pub fn closed_loop(&self, delta: &[f64]) -> Result<StateSpace> {
        let dl = self.delta_matrix(delta)?;
        let k = &dl * self.loop_inverse(&dl)?;
        Ok(StateSpace {
            a: &self.a + &self.bp * &k * &self.cq,
            b: &self.bw + &self.bp * &k * &self.dqw,
            c: &self.cz + &self.dzp * &k * &self.cq,
            d: &self.dzw + &self.dzp * &k * &self.dqw,
        })
    }

    /// `P_ij(j omega)`; `omega = inf` gives the feedthrough blocks.
    pub fn frequency_blocks(&self, omega: f64) -> Result<FrequencyBlocks> {
        let c = to_complex;
        if omega.is_infinite() {
            return Ok(FrequencyBlocks {
                p11: c(&self.dqp),
                p12: c(&self.dqw),
                p21: c(&self.dzp),
                p22: c(&self.dzw),
            });
        }
        let n = self.n_states();
        let si_a = CMat::identity(n, n) * C64::new(0.0, omega) - c(&self.a);
        let mut rhs = CMat::zeros(n, self.bp.ncols() + self.bw.ncols());
        rhs.columns_mut(0, self.bp.ncols()).copy_from(&c(&self.bp));
        rhs.columns_mut(self.bp.ncols(), self.bw.ncols()).copy_from(&c(&self.bw));
        let x = solve_complex(&si_a, &rhs)?;
        let xp = x.columns(0, self.bp.ncols());
        let xw = x.columns(self.bp.ncols(), self.bw.ncols());
        Ok(FrequencyBlocks {
            p11: c(&self.cq) * xp + c(&self.dqp),
            p12: c(&self.cq) * xw + c(&self.dqw),
            p21: c(&self.cz) * xp + c(&self.dzp),
            p22: c(&self.cz) * xw + c(&self.dzw),
        })
    }

    /// `T(delta, j omega) = P22 + P21 Delta (I - P11 Delta)^-1 P12`.
    pub fn transfer_eval(&self, delta: &[f64], omega: f64) -> Result<CMat> {
        let pb = self.frequency_blocks(omega)?;
        let dl = to_complex(&self.delta_matrix(delta)?);
        let q = dl.nrows();
        let m = CMat::identity(q, q) - &pb.p11 * &dl;
        let inner = solve_complex(&m, &pb.p12).map_err(|_| Error::IllPosed)?;
        Ok(&pb.p22 + &pb.p21 * dl * inner)
    }

    /// `dT/d delta_i = P21 (I - Delta P11)^-1 E_i (I - P11 Delta)^-1 P12`.
    pub fn transfer_derivative(&self, delta: &[f64], omega: f64, i: usize) -> Result<CMat> {
        if i >= self.n_params() {
            return Err(Error::InvalidInput(format!("parameter index {i} out of range")));
        }
        let pb = self.frequency_blocks(omega)?;
        let dl = to_complex(&self.delta_matrix(delta)?);
        let q = dl.nrows();
        let eye = CMat::identity(q, q);
        let right = solve_complex(&(&eye - &pb.p11 * &dl), &pb.p12).map_err(|_| Error::IllPosed)?;
        let ei = to_complex(&block_indicator(&self.structure, i));
        let left = solve_complex(&(&eye - &dl * &pb.p11), &ei).map_err(|_| Error::IllPosed)?;
        Ok(&pb.p21 * left * right)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn scalar_plant(dqp: f64) -> LftPlant {
        let s = |v: f64| DMatrix::from_element(1, 1, v);
        LftPlant::uncertain_matrix(s(-1.0), s(1.0), s(1.0), s(dqp), vec![1]).unwrap()
    }

    #[test]
    fn delta_structure() {
        let d = build_delta_matrix(&[0.5, -1.0], &[2, 1]).unwrap();
        assert_eq!(d, DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.5, 0.5, -1.0])));
        assert_eq!(build_delta_matrix(&[0.0], &[3]).unwrap(), DMatrix::zeros(3, 3));
        assert_eq!(build_delta_matrix(&[0.3], &[1]).unwrap()[(0, 0)], 0.3);
    }

    #[test]
    fn scalar_closed_loop_and_derivative() {
        let p = scalar_plant(0.5);
        assert_abs_diff_eq!(p.closed_loop_a(&[1.0]).unwrap()[(0, 0)], 1.0, epsilon = 1e-15);
        assert_eq!(p.closed_loop_a(&[0.0]).unwrap(), p.a);
        assert_abs_diff_eq!(p.d_a_d_delta(&[0.0], 0).unwrap()[(0, 0)], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.d_a_d_delta(&[1.0], 0).unwrap()[(0, 0)], 4.0, epsilon = 1e-14);
        let h = 1e-6;
        let fd = (p.closed_loop_a(&[1.0 + h]).unwrap()[(0, 0)] - p.closed_loop_a(&[1.0 - h]).unwrap()[(0, 0)]) / (2.0 * h);
        assert_abs_diff_eq!(fd, 4.0, epsilon = 1e-6);
        // Dqp delta = 1 is the well-posedness boundary
        assert_eq!(p.closed_loop_a(&[2.0]).unwrap_err(), Error::IllPosed);
    }

    #[test]
    fn affine_case_is_linear() {
        let p = scalar_plant(0.0);
        let d = p.d_a_d_delta(&[0.7], 0).unwrap();
        assert_eq!(d, p.d_a_d_delta(&[-0.2], 0).unwrap());
        assert_abs_diff_eq!(p.closed_loop_a(&[0.7]).unwrap()[(0, 0)], -0.3, epsilon = 1e-15);
    }

    #[test]
    fn json_roundtrip_and_validation() {
        let p = scalar_plant(0.25);
        let s = p.to_json_string();
        assert_eq!(LftPlant::from_json_str(&s).unwrap(), p);
        let bad = r#"{"A": [[1, 0]], "Bp": [[1]], "Cq": [[1]], "Dqp": [[0]], "structure": [1]}"#;
        let err = LftPlant::from_json_str(bad).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(m) if m.contains("matrix A")));
    }

    #[test]
    fn transfer_matches_state_space() {
        let m = |r: usize, c: usize, v: &[f64]| DMatrix::from_row_slice(r, c, v);
        let p = LftPlant::new(
            m(2, 2, &[-1.0, 0.5, -0.3, -2.0]),
            m(2, 2, &[1.0, 0.0, 0.2, 1.0]),
            m(2, 1, &[1.0, 0.5]),
            m(2, 2, &[0.3, 0.1, 0.0, 0.4]),
            m(2, 2, &[0.1, 0.05, 0.0, 0.2]),
            m(2, 1, &[0.1, 0.0]),
            m(1, 2, &[1.0, -1.0]),
            m(1, 2, &[0.2, 0.1]),
            m(1, 1, &[0.05]),
            vec![1, 1],
        )
        .unwrap();
        let delta = [0.4, -0.7];
        let ss = p.closed_loop(&delta).unwrap();
        for w in [0.0, 0.3, 2.0, 50.0] {
            let t = p.transfer_eval(&delta, w).unwrap();
            let sia = CMat::identity(2, 2) * C64::new(0.0, w) - to_complex(&ss.a);
            let direct = to_complex(&ss.c) * solve_complex(&sia, &to_complex(&ss.b)).unwrap() + to_complex(&ss.d);
            assert!((t - direct).norm() < 1e-12);
        }
        let nominal = p.transfer_eval(&[0.0, 0.0], 1.0).unwrap();
        assert!((nominal - p.frequency_blocks(1.0).unwrap().p22).norm() < 1e-15);
    }
}
