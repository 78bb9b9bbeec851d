//! Exact two-phase simplex method over rationals.
//!
//! Solves `minimize c·x subject to A x ≤ b, x ≥ 0`. Rows are kept in a dense
//! tableau but elimination only touches the nonzero entries of the pivot row,
//! which keeps the sparse constraint systems used in this crate cheap.

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::rational::Q;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("row {row} has {got} coefficients, expected {expected}")]
    Shape { row: usize, got: usize, expected: usize },
    #[error("pivot limit of {0} exceeded")]
    PivotLimit(usize),
}

/// One `Σ coeffs·x ≤ rhs` row.
#[derive(Clone, Debug)]
pub struct Row {
    pub coeffs: Vec<Q>,
    pub rhs: Q,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub x: Vec<Q>,
    pub value: Q,
    pub pivots: usize,
}

struct Tableau {
    rows: Vec<Vec<Q>>,
    rhs: Vec<Q>,
    basis: Vec<usize>,
    cost: Vec<Q>,
    cost_rhs: Q,
    pivots: usize,
}

const MAX_PIVOTS: usize = 50_000;
// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_SWITCH: usize = 50;

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        if !p.is_one() {
            let inv = p.recip();
            for v in self.rows[r].iter_mut().filter(|v| !v.is_zero()) {
                *v *= &inv;
            }
            self.rhs[r] *= &inv;
        }
        let support: Vec<usize> = (0..self.rows[r].len()).filter(|&j| !self.rows[r][j].is_zero()).collect();
        let prow: Vec<Q> = support.iter().map(|&j| self.rows[r][j].clone()).collect();
        let prhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][c].is_zero() {
                continue;
            }
            let f = self.rows[i][c].clone();
            for (&j, v) in support.iter().zip(&prow) {
                self.rows[i][j] -= &f * v;
            }
            self.rhs[i] -= &f * &prhs;
        }
        if !self.cost[c].is_zero() {
            let f = self.cost[c].clone();
            for (&j, v) in support.iter().zip(&prow) {
                self.cost[j] -= &f * v;
            }
            self.cost_rhs -= &f * &prhs;
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Runs simplex iterations on the current cost row over columns `< ncols`.
    fn optimize(&mut self, ncols: usize) -> Result<(), LpError> {
        let mut degenerate_run = 0usize;
        loop {
            if self.pivots > MAX_PIVOTS {
                return Err(LpError::PivotLimit(MAX_PIVOTS));
            }
            let bland = degenerate_run >= DEGENERATE_SWITCH;
            let entering = if bland {
                (0..ncols).find(|&j| self.cost[j].is_negative())
            } else {
                let mut best: Option<usize> = None;
                for j in 0..ncols {
                    if self.cost[j].is_negative() && best.is_none_or(|b| self.cost[j] < self.cost[b]) {
                        best = Some(j);
                    }
                }
                best
            };
            let Some(c) = entering else { return Ok(()) };
            let mut leave: Option<(usize, Q)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][c];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / a;
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((r, ratio)) = leave else { return Err(LpError::Unbounded) };
            if ratio.is_zero() {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, c);
        }
    }
}

/// Minimizes `objective·x` over `rows` with `x ≥ 0`.
pub fn minimize(objective: &[Q], rows: &[Row]) -> Result<Solution, LpError> {
    let n = objective.len();
    let m = rows.len();
    for (i, row) in rows.iter().enumerate() {
        if row.coeffs.len() != n {
            return Err(LpError::Shape { row: i, got: row.coeffs.len(), expected: n });
        }
    }
    let needs_art: Vec<bool> = rows.iter().map(|r| r.rhs.is_negative()).collect();
    let n_art = needs_art.iter().filter(|&&b| b).count();
    let width = n + m + n_art;
    let mut t = Tableau {
        rows: Vec::with_capacity(m),
        rhs: Vec::with_capacity(m),
        basis: Vec::with_capacity(m),
        cost: vec![Q::zero(); width],
        cost_rhs: Q::zero(),
        pivots: 0,
    };
    let mut next_art = n + m;
    for (i, row) in rows.iter().enumerate() {
        let mut dense = vec![Q::zero(); width];
        let sign = if needs_art[i] { -Q::one() } else { Q::one() };
        for (j, v) in row.coeffs.iter().enumerate() {
            if !v.is_zero() {
                dense[j] = v * &sign;
            }
        }
        dense[n + i] = sign.clone();
        let rhs = &row.rhs * &sign;
        if needs_art[i] {
            dense[next_art] = Q::one();
            t.basis.push(next_art);
            next_art += 1;
        } else {
            t.basis.push(n + i);
        }
        t.rows.push(dense);
        t.rhs.push(rhs);
    }

    if n_art > 0 {
        // Phase one: minimize the sum of artificials.
        for i in 0..m {
            if needs_art[i] {
                for j in 0..n + m {
                    if !t.rows[i][j].is_zero() {
                        t.cost[j] -= &t.rows[i][j];
                    }
                }
                t.cost_rhs -= &t.rhs[i];
            }
        }
        t.optimize(width)?;
        if !t.cost_rhs.is_zero() {
            return Err(LpError::Infeasible);
        }
        // Drive remaining artificials out of the basis.
        for i in 0..m {
            if t.basis[i] >= n + m {
                if let Some(c) = (0..n + m).find(|&j| !t.rows[i][j].is_zero()) {
                    t.pivot(i, c);
                }
            }
        }
    }

    t.cost = vec![Q::zero(); width];
    t.cost_rhs = Q::zero();
    for (j, c) in objective.iter().enumerate() {
        t.cost[j] = c.clone();
    }
    for i in 0..m {
        let b = t.basis[i];
        if b < width && !t.cost[b].is_zero() {
            let f = t.cost[b].clone();
            for j in 0..width {
                if !t.rows[i][j].is_zero() {
                    let d = &f * &t.rows[i][j];
                    t.cost[j] -= d;
                }
            }
            t.cost_rhs -= &f * &t.rhs[i];
        }
    }
    t.optimize(n + m)?;

    let mut x = vec![Q::zero(); n];
    for i in 0..m {
        if t.basis[i] < n {
            x[t.basis[i]] = t.rhs[i].clone();
        }
    }
    let value = objective.iter().zip(&x).fold(Q::zero(), |acc, (c, v)| acc + c * v);
    Ok(Solution { x, value, pivots: t.pivots })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int};

    fn row(coeffs: &[i64], rhs: i64) -> Row {
        Row { coeffs: coeffs.iter().map(|&v| int(v)).collect(), rhs: int(rhs) }
    }

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y s.t. x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → 36 at (2, 6).
        let rows = [row(&[1, 0], 4), row(&[0, 2], 12), row(&[3, 2], 18)];
        let s = minimize(&[int(-3), int(-5)], &rows).unwrap();
        assert_eq!(s.value, int(-36));
        assert_eq!(s.x, vec![int(2), int(6)]);
    }

    #[test]
    fn needs_phase_one() {
        // min x + y s.t. x + y ≥ 3/2, x ≥ 1/2.
        let rows = [
            Row { coeffs: vec![int(-1), int(-1)], rhs: frac(-3, 2) },
            Row { coeffs: vec![int(-1), int(0)], rhs: frac(-1, 2) },
        ];
        let s = minimize(&[int(1), int(1)], &rows).unwrap();
        assert_eq!(s.value, frac(3, 2));
    }

    #[test]
    fn infeasible_and_unbounded() {
        let rows = [row(&[1], 1), row(&[-1], -2)];
        assert_eq!(minimize(&[int(1)], &rows).unwrap_err(), LpError::Infeasible);
        let rows = [row(&[1, -1], 1)];
        assert_eq!(minimize(&[int(0), int(-1)], &rows).unwrap_err(), LpError::Unbounded);
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Classic cycling example under the largest-coefficient rule.
        let rows = [
            Row { coeffs: vec![frac(1, 2), frac(-11, 2), frac(-5, 2), int(9)], rhs: int(0) },
            Row { coeffs: vec![frac(1, 2), frac(-3, 2), frac(-1, 2), int(1)], rhs: int(0) },
            row(&[1, 0, 0, 0], 1),
        ];
        let s = minimize(&[int(-10), int(57), int(9), int(24)], &rows).unwrap();
        assert_eq!(s.value, int(-1));
    }
}
