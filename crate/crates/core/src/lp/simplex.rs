//! Two-phase primal simplex over exact rationals.
//!
//! All pivoting decisions are index-based and deterministic: identical input
//! produces an identical tableau trajectory and an identical solution
//! bit-for-bit. The entering rule is largest reduced cost (lowest index on
//! ties); after a run of degenerate pivots the solver switches to Bland's
//! lowest-index rule until the objective strictly improves, which rules out
//! cycling.

use super::{LinearProgram, LpError};
use crate::ratio::Rational;
use num_traits::{One, Signed, Zero};

#[derive(Debug, Clone)]
pub struct SimplexSolution {
    pub values: Vec<Rational>,
    pub objective_value: Rational,
}

/// Consecutive degenerate pivots tolerated before Bland's rule takes over.
const STALL_LIMIT: u32 = 24;

struct Tableau {
    rows: Vec<Vec<Rational>>,
    cost: Vec<Rational>,
    basis: Vec<usize>,
    num_structural: usize,
    ncols: usize,
}

impl Tableau {
    fn rhs(&self, r: usize) -> &Rational {
        &self.rows[r][self.ncols]
    }

    // The last cost cell carries the current objective value; the pivot's
    // uniform row update keeps it in sync.
    fn objective(&self) -> Rational {
        self.cost[self.ncols].clone()
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let mut pivot_row = std::mem::take(&mut self.rows[r]);
        let inv = Rational::one() / pivot_row[j].clone();
        if !inv.is_one() {
            for c in 0..=self.ncols {
                if !pivot_row[c].is_zero() {
                    pivot_row[c] = &pivot_row[c] * &inv;
                }
            }
        }
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let factor = self.rows[i][j].clone();
            if factor.is_zero() {
                continue;
            }
            let row = &mut self.rows[i];
            for c in 0..=self.ncols {
                if !pivot_row[c].is_zero() {
                    row[c] = &row[c] - &(&factor * &pivot_row[c]);
                }
            }
        }
        let factor = self.cost[j].clone();
        if !factor.is_zero() {
            for c in 0..=self.ncols {
                if !pivot_row[c].is_zero() {
                    self.cost[c] = &self.cost[c] - &(&factor * &pivot_row[c]);
                }
            }
        }
        self.rows[r] = pivot_row;
        self.basis[r] = j;
    }

    /// Entering column among structural variables: most negative reduced cost
    /// (lowest index on ties), or lowest index with negative reduced cost when
    /// `bland` is set. Returns None at optimality.
    fn entering(&self, bland: bool) -> Option<usize> {
        let mut best: Option<usize> = None;
        for j in 0..self.num_structural {
            if self.cost[j].is_negative() {
                if bland {
                    return Some(j);
                }
                best = match best {
                    None => Some(j),
                    Some(b) if self.cost[j] < self.cost[b] => Some(j),
                    other => other,
                };
            }
        }
        best
    }

    /// Leaving row by the minimum-ratio test; ties broken by the lowest basis
    /// variable index. Returns None when the column is unbounded.
    fn leaving(&self, j: usize) -> Option<usize> {
        let mut best: Option<(Rational, usize)> = None;
        for r in 0..self.rows.len() {
            let coef = &self.rows[r][j];
            if coef.is_positive() {
                let ratio = self.rhs(r) / coef;
                best = match best {
                    None => Some((ratio, r)),
                    Some((ref cur, cr)) => {
                        if ratio < *cur
                            || (ratio == *cur && self.basis[r] < self.basis[cr])
                        {
                            Some((ratio, r))
                        } else {
                            Some((cur.clone(), cr))
                        }
                    }
                };
            }
        }
        best.map(|(_, r)| r)
    }

    /// Runs pivots until optimality. Errors with Unbounded if a column has no
    /// positive entry.
    fn optimize(&mut self) -> Result<(), LpError> {
        let mut stall: u32 = 0;
        let mut bland = false;
        let mut last_obj = self.objective();
        while let Some(j) = self.entering(bland) {
            let r = self.leaving(j).ok_or(LpError::Unbounded)?;
            self.pivot(r, j);
            let obj = self.objective();
            if obj > last_obj {
                stall = 0;
                bland = false;
                last_obj = obj;
            } else {
                stall += 1;
                if stall >= STALL_LIMIT {
                    bland = true;
                }
            }
        }
        Ok(())
    }
}

/// Solves the program exactly, reporting infeasibility and unboundedness as
/// distinct errors.
pub fn solve_lp_exact(lp: &LinearProgram) -> Result<SimplexSolution, LpError> {
    lp.validate()?;
    let n = lp.num_vars;
    let m = lp.eq_constraints.len();
    let ncols = n + m;

    let mut rows = vec![vec![Rational::zero(); ncols + 1]; m];
    for (r, (row, rhs)) in lp.eq_constraints.iter().enumerate() {
        for (j, coef) in row {
            rows[r][*j] = &rows[r][*j] + coef;
        }
        rows[r][ncols] = rhs.clone();
        if rows[r][ncols].is_negative() {
            for c in 0..=ncols {
                if !rows[r][c].is_zero() {
                    rows[r][c] = -rows[r][c].clone();
                }
            }
        }
        rows[r][n + r] = Rational::one();
    }
    let basis: Vec<usize> = (0..m).map(|r| n + r).collect();

    // Phase 1: maximize minus the sum of artificials. With the artificial
    // basis, the reduced cost of structural column j is minus its column sum.
    let mut cost = vec![Rational::zero(); ncols + 1];
    for j in 0..n {
        let mut sum = Rational::zero();
        for row in rows.iter() {
            if !row[j].is_zero() {
                sum = &sum + &row[j];
            }
        }
        cost[j] = -sum;
    }
    let mut rhs_sum = Rational::zero();
    for row in rows.iter() {
        rhs_sum = &rhs_sum + &row[ncols];
    }
    cost[ncols] = -rhs_sum;

    let mut t = Tableau { rows, cost, basis, num_structural: n, ncols };
    t.optimize()?;
    if !t.objective().is_zero() {
        return Err(LpError::Infeasible);
    }

    // Drive any artificial still basic (at value zero) out of the basis, or
    // leave it parked on a redundant all-zero row.
    for r in 0..m {
        if t.basis[r] >= n {
            if let Some(j) = (0..n).find(|&j| !t.rows[r][j].is_zero()) {
                t.pivot(r, j);
            }
        }
    }

    // Phase 2: reduced costs of the true objective under the current basis.
    let mut obj = vec![Rational::zero(); n];
    for (j, coef) in &lp.objective {
        obj[*j] = &obj[*j] + coef;
    }
    let mut cost = vec![Rational::zero(); ncols + 1];
    for j in 0..n {
        cost[j] = -obj[j].clone();
    }
    for r in 0..m {
        let b = t.basis[r];
        if b < n && !obj[b].is_zero() {
            let factor = obj[b].clone();
            let row = t.rows[r].clone();
            for c in 0..=ncols {
                if !row[c].is_zero() {
                    cost[c] = &cost[c] + &(&factor * &row[c]);
                }
            }
        }
    }
    // Zero out reduced costs of basic columns (they are implied zero; keep
    // them exactly zero to avoid re-entering).
    for r in 0..m {
        if t.basis[r] < n {
            cost[t.basis[r]] = Rational::zero();
        }
    }
    t.cost = cost;
    t.optimize()?;

    let mut values = vec![Rational::zero(); n];
    for r in 0..m {
        if t.basis[r] < n {
            values[t.basis[r]] = t.rhs(r).clone();
        }
    }
    let mut objective_value = Rational::zero();
    for (j, coef) in &lp.objective {
        if !values[*j].is_zero() {
            objective_value = &objective_value + &(coef * &values[*j]);
        }
    }
    Ok(SimplexSolution { values, objective_value })
}
