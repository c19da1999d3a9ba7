//! Dense two-phase simplex for standard-form linear programs
//!
//! ```text
//! minimize c^T x  subject to  A x = b,  x >= 0
//! ```
//!
//! Pivoting follows Bland's rule (smallest improving column, ties in the
//! ratio test broken by smallest basic variable), which rules out cycling on
//! the heavily degenerate transportation-type problems this crate produces.
//! Phase one minimizes the sum of artificial variables; artificials left in
//! the basis at zero are pivoted out, and rows where that is impossible are
//! dropped as redundant.

use thiserror::Error;

const PIVOT_TOL: f64 = 1e-9;
const REDUCED_COST_TOL: f64 = 1e-10;
const DEFAULT_ITERATION_CAP: usize = 200_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("inconsistent dimensions: {0}")]
    Dimensions(String),
    #[error("problem data contains a non-finite value")]
    NonFinite,
    #[error("problem is infeasible (phase-one residual {0:e})")]
    Infeasible(f64),
    #[error("problem is unbounded along column {0}")]
    Unbounded(usize),
    #[error("simplex iteration cap of {0} exceeded")]
    IterationLimit(usize),
}

/// `min c^T x` s.t. `A x = b`, `x >= 0`, with `A` stored row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    costs: Vec<f64>,
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub value: f64,
    pub x: Vec<f64>,
    pub iterations: usize,
}

impl LpProblem {
    pub fn new(costs: Vec<f64>, rows: Vec<Vec<f64>>, rhs: Vec<f64>) -> Result<Self, LpError> {
        if rows.len() != rhs.len() {
            return Err(LpError::Dimensions(format!(
                "{} constraint rows but {} right-hand sides",
                rows.len(),
                rhs.len()
            )));
        }
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != costs.len()) {
            return Err(LpError::Dimensions(format!(
                "row {i} has {} coefficients, expected {}",
                r.len(),
                costs.len()
            )));
        }
        let finite = costs.iter().chain(rows.iter().flatten()).chain(&rhs).all(|v| v.is_finite());
        if !finite {
            return Err(LpError::NonFinite);
        }
        Ok(Self { costs, rows, rhs })
    }

    pub fn num_vars(&self) -> usize {
        self.costs.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.rows.len()
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        self.solve_with_cap(DEFAULT_ITERATION_CAP)
    }

    pub fn solve_with_cap(&self, cap: usize) -> Result<LpSolution, LpError> {
        Tableau::new(self).run(self, cap)
    }
}

pub fn lp_solve(problem: &LpProblem) -> Result<LpSolution, LpError> {
    problem.solve()
}

struct Tableau {
    /// Constraint rows: `num_vars + num_rows` coefficients, then the rhs.
    rows: Vec<Vec<f64>>,
    /// Reduced costs, last entry is minus the objective value.
    obj: Vec<f64>,
    basis: Vec<usize>,
    num_vars: usize,
    width: usize,
    iterations: usize,
}

impl Tableau {
    fn new(p: &LpProblem) -> Self {
        let n = p.num_vars();
        let m = p.num_constraints();
        let width = n + m + 1;
        let mut rows = Vec::with_capacity(m);
        for (i, (a, &b)) in p.rows.iter().zip(&p.rhs).enumerate() {
            let sign = if b < 0.0 { -1.0 } else { 1.0 };
            let mut row = vec![0.0; width];
            for (dst, &v) in row.iter_mut().zip(a) {
                *dst = sign * v;
            }
            row[n + i] = 1.0;
            row[width - 1] = sign * b;
            rows.push(row);
        }
        // Phase-one reduced costs with all artificials basic.
        let mut obj = vec![0.0; width];
        for row in &rows {
            for j in 0..n {
                obj[j] -= row[j];
            }
            obj[width - 1] -= row[width - 1];
        }
        Self {
            rows,
            obj,
            basis: (n..n + m).collect(),
            num_vars: n,
            width,
            iterations: 0,
        }
    }

    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.width - 1]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        self.rows[r][c] = 1.0;
        let pivot_row = std::mem::take(&mut self.rows[r]);
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (x, &y) in row.iter_mut().zip(&pivot_row) {
                    *x -= f * y;
                }
                row[c] = 0.0;
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            for (x, &y) in self.obj.iter_mut().zip(&pivot_row) {
                *x -= f * y;
            }
            self.obj[c] = 0.0;
        }
        self.rows[r] = pivot_row;
        self.basis[r] = c;
    }

    /// Bland-rule simplex on columns `0..allowed`.
    fn optimize(&mut self, allowed: usize, cap: usize) -> Result<(), LpError> {
        loop {
            let Some(c) = (0..allowed).find(|&j| self.obj[j] < -REDUCED_COST_TOL) else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                let a = row[c];
                if a > PIVOT_TOL {
                    let ratio = row[self.width - 1].max(0.0) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((best, br)) => {
                            let tie = (ratio - br).abs() <= 1e-12 * (1.0 + br.abs());
                            if ratio < br && !tie || tie && self.basis[i] < self.basis[best] {
                                Some((i, ratio))
                            } else {
                                Some((best, br))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Err(LpError::Unbounded(c));
            };
            if self.iterations >= cap {
                return Err(LpError::IterationLimit(cap));
            }
            self.iterations += 1;
            self.pivot(r, c);
        }
    }

    fn run(mut self, p: &LpProblem, cap: usize) -> Result<LpSolution, LpError> {
        let n = self.num_vars;
        let total = self.width - 1;

        self.optimize(total, cap)?;
        let scale = 1.0 + p.rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let residual = -self.obj[total];
        if residual > 1e-9 * scale {
            return Err(LpError::Infeasible(residual));
        }

        // Drive remaining artificials out of the basis or drop their rows.
        let mut i = 0;
        while i < self.rows.len() {
            if self.basis[i] >= n {
                match (0..n).find(|&j| self.rows[i][j].abs() > PIVOT_TOL) {
                    Some(j) => self.pivot(i, j),
                    None => {
                        self.rows.remove(i);
                        self.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }

        // Phase-two reduced costs.
        self.obj = vec![0.0; self.width];
        self.obj[..n].copy_from_slice(&p.costs);
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            let cb = p.costs[b];
            if cb != 0.0 {
                for (x, &y) in self.obj.iter_mut().zip(row) {
                    *x -= cb * y;
                }
            }
        }
        for &b in &self.basis {
            self.obj[b] = 0.0;
        }
        self.optimize(n, cap)?;

        let mut x = vec![0.0; n];
        for (i, &b) in self.basis.iter().enumerate() {
            x[b] = self.rhs(i).max(0.0);
        }
        let value = x.iter().zip(&p.costs).map(|(a, b)| a * b).sum();
        Ok(LpSolution {
            value,
            x,
            iterations: self.iterations,
        })
    }
}
