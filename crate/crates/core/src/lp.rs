//! Dense two-phase primal simplex for small linear programs
//!
//! ```text
//! min c^T x   s.t.   rows x <= rhs,   lower <= x <= upper
//! ```
//!
//! Bounds may be infinite. Pivoting is Dantzig's rule, switching to Bland's
//! rule after a run of degenerate pivots, so the method terminates.

use crate::error::{check_dim, Error, Result};
use crate::feasible::dot;

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-12;
const FEAS_TOL: f64 = 1e-9;
const DEGENERATE_RUN: usize = 30;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub cost: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Multipliers `mu >= 0` of the inequality rows.
    pub row_duals: Vec<f64>,
    /// `c + rows^T mu`; must be supported by the active bounds.
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
}

impl LinearProgram {
    /// LP with variables in `[lower, upper]` and no rows yet.
    pub fn new(cost: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Self {
            cost,
            rows: Vec::new(),
            rhs: Vec::new(),
            lower,
            upper,
        }
    }

    pub fn add_row(&mut self, row: Vec<f64>, rhs: f64) {
        self.rows.push(row);
        self.rhs.push(rhs);
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    fn validate(&self) -> Result<()> {
        let n = self.cost.len();
        check_dim(n, self.lower.len())?;
        check_dim(n, self.upper.len())?;
        check_dim(self.rows.len(), self.rhs.len())?;
        for r in &self.rows {
            check_dim(n, r.len())?;
        }
        for (l, u) in self.lower.iter().zip(&self.upper) {
            if l > u || l.is_nan() || u.is_nan() {
                return Err(Error::Infeasible);
            }
        }
        let finite = self.cost.iter().chain(&self.rhs).all(|v| v.is_finite())
            && self.rows.iter().flatten().all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidInput("non-finite LP data".into()));
        }
        Ok(())
    }

    pub fn solve(&self) -> Result<LpSolution> {
        self.validate()?;
        let std = StandardForm::build(self);
        let mut tab = Tableau::new(&std);
        let mut iterations = tab.phase_one()?;
        iterations += tab.phase_two(&std.cost)?;
        let xs = tab.primal(std.ncols);
        let x = std.recover(&xs);
        let row_duals: Vec<f64> = (0..self.rows.len())
            .map(|i| tab.obj[std.slack_col(i)].max(0.0))
            .collect();
        let mut reduced_costs = self.cost.clone();
        for (row, mu) in self.rows.iter().zip(&row_duals) {
            for (r, a) in reduced_costs.iter_mut().zip(row) {
                *r += mu * a;
            }
        }
        Ok(LpSolution {
            objective: dot(&self.cost, &x),
            x,
            row_duals,
            reduced_costs,
            iterations,
        })
    }
}

impl LpSolution {
    /// Worst row or bound violation of `x`.
    pub fn primal_infeasibility(&self, lp: &LinearProgram) -> f64 {
        let mut worst = 0.0f64;
        for (row, b) in lp.rows.iter().zip(&lp.rhs) {
            worst = worst.max(dot(row, &self.x) - b);
        }
        for ((x, l), u) in self.x.iter().zip(&lp.lower).zip(&lp.upper) {
            worst = worst.max(l - x).max(x - u);
        }
        worst
    }

    /// Lagrangian dual value `-rhs^T mu + sum_j min_{x_j in [l_j, u_j]} r_j x_j`
    /// and the dual infeasibility (reduced costs pointing at an infinite bound).
    pub fn dual_bound(&self, lp: &LinearProgram) -> (f64, f64) {
        let mut value = -dot(&lp.rhs, &self.row_duals);
        let mut infeas = 0.0f64;
        for ((r, l), u) in self.reduced_costs.iter().zip(&lp.lower).zip(&lp.upper) {
            if *r > 0.0 {
                if l.is_finite() {
                    value += r * l;
                } else {
                    infeas = infeas.max(*r);
                }
            } else if *r < 0.0 {
                if u.is_finite() {
                    value += r * u;
                } else {
                    infeas = infeas.max(-r);
                }
            }
        }
        (value, infeas)
    }

    /// Primal minus dual objective, nonnegative up to rounding.
    pub fn duality_gap(&self, lp: &LinearProgram) -> f64 {
        let (d, _) = self.dual_bound(lp);
        self.objective - d
    }
}

#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// `x = l + s`.
    Shift(usize, f64),
    /// `x = u - s`.
    Reflect(usize, f64),
    /// `x = s+ - s-`.
    Split(usize, usize),
}

/// `min cost^T s  s.t.  rows s <= rhs, s >= 0`.
struct StandardForm {
    maps: Vec<VarMap>,
    ncols: usize,
    cost: Vec<f64>,
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
}

impl StandardForm {
    fn build(lp: &LinearProgram) -> Self {
        let mut maps = Vec::with_capacity(lp.num_vars());
        let mut ncols = 0;
        for (l, u) in lp.lower.iter().zip(&lp.upper) {
            let m = if l.is_finite() {
                VarMap::Shift(ncols, *l)
            } else if u.is_finite() {
                VarMap::Reflect(ncols, *u)
            } else {
                ncols += 1;
                VarMap::Split(ncols - 1, ncols)
            };
            ncols += 1;
            maps.push(m);
        }
        let mut cost = vec![0.0; ncols];
        let transform = |row: &[f64], out: &mut Vec<f64>| -> f64 {
            // returns the constant moved to the right-hand side
            let mut shift = 0.0;
            for (j, a) in row.iter().enumerate() {
                match maps[j] {
                    VarMap::Shift(c, l) => {
                        out[c] += a;
                        shift += a * l;
                    }
                    VarMap::Reflect(c, u) => {
                        out[c] -= a;
                        shift += a * u;
                    }
                    VarMap::Split(p, q) => {
                        out[p] += a;
                        out[q] -= a;
                    }
                }
            }
            shift
        };
        transform(&lp.cost, &mut cost);
        let mut rows = Vec::with_capacity(lp.rows.len());
        let mut rhs = Vec::with_capacity(lp.rows.len());
        for (row, b) in lp.rows.iter().zip(&lp.rhs) {
            let mut out = vec![0.0; ncols];
            let shift = transform(row, &mut out);
            rows.push(out);
            rhs.push(b - shift);
        }
        for (j, (l, u)) in lp.lower.iter().zip(&lp.upper).enumerate() {
            if let VarMap::Shift(c, _) = maps[j] {
                if u.is_finite() {
                    let mut out = vec![0.0; ncols];
                    out[c] = 1.0;
                    rows.push(out);
                    rhs.push(u - l);
                }
            }
        }
        Self {
            maps,
            ncols,
            cost,
            rows,
            rhs,
        }
    }

    fn slack_col(&self, i: usize) -> usize {
        self.ncols + i
    }

    fn recover(&self, s: &[f64]) -> Vec<f64> {
        self.maps
            .iter()
            .map(|m| match *m {
                VarMap::Shift(c, l) => l + s[c],
                VarMap::Reflect(c, u) => u - s[c],
                VarMap::Split(p, q) => s[p] - s[q],
            })
            .collect()
    }
}

/// Columns: structural, one slack per row, one artificial per row with a
/// negative right-hand side. The last entry of each row is the rhs.
struct Tableau {
    t: Vec<Vec<f64>>,
    obj: Vec<f64>,
    basis: Vec<usize>,
    width: usize,
    first_art: usize,
    max_iter: usize,
}

impl Tableau {
    fn new(sf: &StandardForm) -> Self {
        let m = sf.rows.len();
        let n_art = sf.rhs.iter().filter(|b| **b < 0.0).count();
        let first_art = sf.ncols + m;
        let width = first_art + n_art;
        let mut t = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut next_art = first_art;
        for (i, (row, b)) in sf.rows.iter().zip(&sf.rhs).enumerate() {
            let mut r = vec![0.0; width + 1];
            r[..sf.ncols].copy_from_slice(row);
            r[sf.ncols + i] = 1.0;
            r[width] = *b;
            if *b < 0.0 {
                r.iter_mut().for_each(|v| *v = -*v);
                r[next_art] = 1.0;
                basis.push(next_art);
                next_art += 1;
            } else {
                basis.push(sf.ncols + i);
            }
            t.push(r);
        }
        Self {
            t,
            obj: vec![0.0; width + 1],
            basis,
            width,
            first_art,
            max_iter: 50 * (width + m) + 1000,
        }
    }

    fn set_objective(&mut self, cost: &[f64]) {
        let w = self.width;
        let mut obj = vec![0.0; w + 1];
        obj[..cost.len()].copy_from_slice(cost);
        for (row, &b) in self.t.iter().zip(&self.basis) {
            let cb = if b < cost.len() { cost[b] } else { 0.0 };
            if cb != 0.0 {
                for (o, v) in obj.iter_mut().zip(row) {
                    *o -= cb * v;
                }
            }
        }
        self.obj = obj;
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c];
        self.t[r].iter_mut().for_each(|v| *v /= p);
        let prow = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&prow) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            for (v, pv) in self.obj.iter_mut().zip(&prow) {
                *v -= f * pv;
            }
            self.obj[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Runs simplex pivots on columns `< allowed` until optimal.
    fn optimize(&mut self, allowed: usize) -> Result<usize> {
        let w = self.width;
        let scale = 1.0 + self.obj[..allowed].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut degenerate = 0usize;
        let mut iters = 0usize;
        loop {
            let bland = degenerate >= DEGENERATE_RUN;
            let mut enter = None;
            let mut best = -COST_TOL * scale;
            for j in 0..allowed {
                let r = self.obj[j];
                if r < best {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = r;
                }
            }
            let Some(c) = enter else {
                return Ok(iters);
            };
            let mut leave: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for (i, row) in self.t.iter().enumerate() {
                if row[c] > PIVOT_TOL {
                    let ratio = row[w].max(0.0) / row[c];
                    let better = match leave {
                        None => true,
                        Some(l) => {
                            let tie = (ratio - best_ratio).abs() <= 1e-12 * (1.0 + best_ratio);
                            if tie {
                                self.basis[i] < self.basis[l]
                            } else {
                                ratio < best_ratio
                            }
                        }
                    };
                    if better {
                        leave = Some(i);
                        best_ratio = best_ratio.min(ratio);
                    }
                }
            }
            let Some(r) = leave else {
                return Err(Error::Unbounded);
            };
            if best_ratio <= 1e-14 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, c);
            iters += 1;
            if iters > self.max_iter {
                return Err(Error::LpCycling(iters));
            }
        }
    }

    fn phase_one(&mut self) -> Result<usize> {
        if self.first_art == self.width {
            return Ok(0);
        }
        let mut cost = vec![0.0; self.width];
        cost[self.first_art..].iter_mut().for_each(|c| *c = 1.0);
        self.set_objective(&cost);
        let iters = self.optimize(self.width)?;
        let infeas = -self.obj[self.width];
        let scale = 1.0 + self.t.iter().fold(0.0f64, |m, r| m.max(r[self.width].abs()));
        if infeas > FEAS_TOL * scale {
            return Err(Error::Infeasible);
        }
        // drive remaining artificials out of the basis; drop redundant rows
        let mut r = 0;
        while r < self.t.len() {
            if self.basis[r] >= self.first_art {
                let col = (0..self.first_art)
                    .filter(|&j| self.t[r][j].abs() > 1e-9)
                    .max_by(|&a, &b| self.t[r][a].abs().total_cmp(&self.t[r][b].abs()));
                match col {
                    Some(c) => self.pivot(r, c),
                    None => {
                        self.t.remove(r);
                        self.basis.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
        Ok(iters)
    }

    fn phase_two(&mut self, cost: &[f64]) -> Result<usize> {
        self.set_objective(cost);
        self.optimize(self.first_art)
    }

    fn primal(&self, n: usize) -> Vec<f64> {
        let mut x = vec![0.0; n];
        for (row, &b) in self.t.iter().zip(&self.basis) {
            if b < n {
                x[b] = row[self.width].max(0.0);
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const INF: f64 = f64::INFINITY;

    #[test]
    fn one_plane_one_variable() {
        // variables (y, t): min t s.t. y - t <= 0, -1 <= y <= 1
        let mut lp = LinearProgram::new(vec![0.0, 1.0], vec![-1.0, -INF], vec![1.0, INF]);
        lp.add_row(vec![1.0, -1.0], 0.0);
        let s = lp.solve().unwrap();
        assert_abs_diff_eq!(s.x[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.objective, -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.row_duals[0], 1.0, epsilon = 1e-14);
        assert!(s.duality_gap(&lp).abs() < 1e-12);
    }

    #[test]
    fn opposing_planes() {
        let mut lp = LinearProgram::new(vec![0.0, 1.0], vec![-1.0, -INF], vec![1.0, INF]);
        lp.add_row(vec![1.0, -1.0], 0.0);
        lp.add_row(vec![-1.0, -1.0], 0.0);
        let s = lp.solve().unwrap();
        assert_abs_diff_eq!(s.objective, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.x[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.row_duals[0] + s.row_duals[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn textbook_maximisation() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
        let mut lp = LinearProgram::new(vec![-3.0, -5.0], vec![0.0; 2], vec![INF; 2]);
        lp.add_row(vec![1.0, 0.0], 4.0);
        lp.add_row(vec![0.0, 2.0], 12.0);
        lp.add_row(vec![3.0, 2.0], 18.0);
        let s = lp.solve().unwrap();
        assert_abs_diff_eq!(s.objective, -36.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.x[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.x[1], 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.row_duals[1], 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s.row_duals[2], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn negative_rhs_needs_phase_one() {
        // min x + y s.t. x + y >= 2, x - y <= 1
        let mut lp = LinearProgram::new(vec![1.0, 1.0], vec![0.0; 2], vec![INF; 2]);
        lp.add_row(vec![-1.0, -1.0], -2.0);
        lp.add_row(vec![1.0, -1.0], 1.0);
        let s = lp.solve().unwrap();
        assert_abs_diff_eq!(s.objective, 2.0, epsilon = 1e-12);
        assert!(s.primal_infeasibility(&lp) < 1e-12);
        assert!(s.duality_gap(&lp).abs() < 1e-10);
    }

    #[test]
    fn infeasible_detected() {
        let mut lp = LinearProgram::new(vec![1.0], vec![0.0], vec![1.0]);
        lp.add_row(vec![-1.0], -2.0);
        assert_eq!(lp.solve().unwrap_err(), Error::Infeasible);
    }

    #[test]
    fn unbounded_detected() {
        let lp = LinearProgram::new(vec![-1.0], vec![0.0], vec![INF]);
        assert_eq!(lp.solve().unwrap_err(), Error::Unbounded);
    }

    #[test]
    fn upper_bounded_and_reflected_variables() {
        // min -x + y, x in [-2, 3], y in (-inf, 5], x + y >= 1
        let mut lp = LinearProgram::new(vec![-1.0, 1.0], vec![-2.0, -INF], vec![3.0, 5.0]);
        lp.add_row(vec![-1.0, -1.0], -1.0);
        let s = lp.solve().unwrap();
        assert_abs_diff_eq!(s.x[0], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.x[1], -2.0, epsilon = 1e-12);
        assert!(s.duality_gap(&lp).abs() < 1e-10);
        assert!(s.dual_bound(&lp).1 < 1e-12);
    }

    #[test]
    fn redundant_equality_rows() {
        // x + y <= 1 and x + y >= 1 twice
        let mut lp = LinearProgram::new(vec![1.0, 0.0], vec![0.0; 2], vec![INF; 2]);
        lp.add_row(vec![1.0, 1.0], 1.0);
        lp.add_row(vec![-1.0, -1.0], -1.0);
        lp.add_row(vec![-1.0, -1.0], -1.0);
        let s = lp.solve().unwrap();
        assert_abs_diff_eq!(s.objective, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.x[1], 1.0, epsilon = 1e-12);
    }

    proptest::proptest! {
        #[test]
        fn random_box_lps_are_certified(
            seed_rows in proptest::collection::vec(proptest::collection::vec(-3.0f64..3.0, 3), 1..8),
            b in proptest::collection::vec(0.1f64..4.0, 8),
            c in proptest::collection::vec(-2.0f64..2.0, 3),
        ) {
            let mut lp = LinearProgram::new(c, vec![-1.0; 3], vec![1.0; 3]);
            for (row, rhs) in seed_rows.into_iter().zip(b) {
                lp.add_row(row, rhs);
            }
            // origin is feasible (rhs > 0), box keeps it bounded
            let s = lp.solve().unwrap();
            proptest::prop_assert!(s.primal_infeasibility(&lp) < 1e-9);
            let gap = s.duality_gap(&lp);
            proptest::prop_assert!(gap.abs() < 1e-9 * (1.0 + s.objective.abs()), "gap {}", gap);
            proptest::prop_assert!(s.dual_bound(&lp).1 < 1e-9);
        }
    }
}
