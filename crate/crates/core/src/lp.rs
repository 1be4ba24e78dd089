//! Small dense linear programs in standard form:
//!
//! ```text
//! min c'x   s.t.   A x = b,   x >= 0
//! ```
//!
//! Two-phase tableau simplex with Bland's rule: the entering variable is the
//! lowest-index column with negative reduced cost and ratio-test ties leave by
//! lowest basic variable index. Bland's rule cannot cycle, and the fixed
//! tie-breaking makes every solve deterministic. Problems here are a few tens
//! of rows, so a dense tableau is the right representation.

use crate::error::{Error, Result};
use nalgebra::DMatrix;

/// Equality-form problem data. Rows of `constraints` pair with `rhs`.
#[derive(Clone, Debug)]
pub struct StandardForm {
    pub objective: Vec<f64>,
    pub constraints: DMatrix<f64>,
    pub rhs: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub x: Vec<f64>,
    pub objective: f64,
}

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-7;
const RATIO_TIE_TOL: f64 = 1e-12;
const MAX_ITERS: usize = 20_000;

struct Tableau {
    /// `m x (width + 1)` row-major; last column is the right-hand side.
    rows: Vec<Vec<f64>>,
    /// Reduced-cost row, same width; last cell is minus the objective value.
    cost: Vec<f64>,
    /// Basic variable of each row.
    basis: Vec<usize>,
    /// Total columns excluding the rhs cell.
    width: usize,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let inv = 1.0 / self.rows[row][col];
        for v in self.rows[row].iter_mut() {
            *v *= inv;
        }
        let pivot_row = self.rows[row].clone();
        for (i, r) in self.rows.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            let f = r[col];
            if f != 0.0 {
                for (v, p) in r.iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
            }
        }
        let f = self.cost[col];
        if f != 0.0 {
            for (v, p) in self.cost.iter_mut().zip(&pivot_row) {
                *v -= f * p;
            }
        }
        self.basis[row] = col;
    }

    /// Runs simplex iterations until optimality. Columns in
    /// `enterable_limit..width` may never enter the basis.
    fn optimize(&mut self, enterable_limit: usize) -> Result<()> {
        for _ in 0..MAX_ITERS {
            let Some(col) = (0..enterable_limit).find(|&j| self.cost[j] < -COST_TOL) else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][col];
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rows[i][self.width] / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((best_i, best)) => {
                        if ratio < best - RATIO_TIE_TOL {
                            Some((i, ratio))
                        } else if ratio <= best + RATIO_TIE_TOL
                            && self.basis[i] < self.basis[best_i]
                        {
                            Some((i, best))
                        } else {
                            Some((best_i, best))
                        }
                    }
                };
            }
            let Some((row, _)) = leave else {
                return Err(Error::LpUnbounded);
            };
            self.pivot(row, col);
        }
        Err(Error::LpDidNotConverge)
    }
}

/// Solves the standard-form problem, reporting infeasibility/unboundedness.
pub fn solve(lp: &StandardForm) -> Result<Solution> {
    let m = lp.constraints.nrows();
    let n = lp.constraints.ncols();
    assert_eq!(lp.rhs.len(), m, "rhs length does not match constraint rows");
    assert_eq!(lp.objective.len(), n, "objective length does not match columns");

    // Phase 1: artificial columns n..n+m form the starting identity basis.
    let width = n + m;
    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        let mut row = vec![0.0; width + 1];
        let flip = if lp.rhs[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            row[j] = flip * lp.constraints[(i, j)];
        }
        row[n + i] = 1.0;
        row[width] = flip * lp.rhs[i];
        rows.push(row);
    }
    // Reduced costs for min(sum of artificials) with the artificial basis.
    let mut cost = vec![0.0; width + 1];
    for j in 0..=width {
        let col_sum: f64 = rows.iter().map(|r| r[j]).sum();
        cost[j] = if (n..width).contains(&j) { 1.0 - col_sum } else { -col_sum };
    }
    let mut tab = Tableau { rows, cost, basis: (n..width).collect(), width };
    tab.optimize(width)?;

    let phase1 = -tab.cost[width];
    if phase1 > FEAS_TOL {
        return Err(Error::LpInfeasible);
    }

    // Drive leftover artificials out of the basis where possible. A row with
    // no original-column pivot is a redundant constraint; its artificial
    // stays basic at zero and can never re-enter play in phase 2.
    for i in 0..m {
        if tab.basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| tab.rows[i][j].abs() > PIVOT_TOL) {
                tab.pivot(i, j);
            }
        }
    }

    // Phase 2: original objective, artificial columns barred from entering.
    for j in 0..=width {
        let mut v = if j < n { lp.objective[j] } else { 0.0 };
        for (i, r) in tab.rows.iter().enumerate() {
            if tab.basis[i] < n {
                v -= lp.objective[tab.basis[i]] * r[j];
            }
        }
        tab.cost[j] = v;
    }
    tab.optimize(n)?;

    let mut x = vec![0.0; n];
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] = tab.rows[i][tab.width];
        }
    }
    let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(Solution { x, objective })
}
