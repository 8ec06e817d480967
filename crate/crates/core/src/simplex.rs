//! Dense two-phase primal simplex with Bland's anti-cycling rule.
//!
//! Problems are stated in equality form: minimize `c·x` subject to `A x = b`,
//! `x ≥ 0`. Phase one starts from an artificial identity basis, so callers
//! never need to supply a feasible point. Dual values are recovered from the
//! reduced costs of the artificial columns, which carry `B⁻¹` through every
//! pivot.

use thiserror::Error;

const PIVOT_EPS: f64 = 1e-11;
const COST_EPS: f64 = 1e-11;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("is infeasible (phase-one residual {0:e})")]
    Infeasible(f64),
    #[error("is unbounded")]
    Unbounded,
    #[error("exceeded the pivot limit of {0}")]
    PivotLimit(usize),
    #[error("has inconsistent dimensions")]
    Dimension,
}

/// `min cost·x  s.t.  rows·x = rhs, x ≥ 0`.
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    pub cost: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// One multiplier per equality row, signed for the original row orientation.
    pub duals: Vec<f64>,
    pub pivots: usize,
}

impl LinearProgram {
    pub fn new(n_vars: usize) -> Self {
        Self {
            cost: vec![0.0; n_vars],
            rows: Vec::new(),
            rhs: Vec::new(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, rhs: f64) {
        self.rows.push(coeffs);
        self.rhs.push(rhs);
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        self.solve_with_limit(200_000)
    }

    pub fn solve_with_limit(&self, max_pivots: usize) -> Result<LpSolution, LpError> {
        let n = self.cost.len();
        let m = self.rows.len();
        if self.rhs.len() != m || self.rows.iter().any(|r| r.len() != n) {
            return Err(LpError::Dimension);
        }
        Tableau::new(self).run(&self.cost, max_pivots)
    }
}

struct Tableau {
    n: usize,
    m: usize,
    width: usize,
    /// `m` constraint rows followed by the objective row, each `n + m + 1` wide.
    cells: Vec<f64>,
    basis: Vec<usize>,
    sign: Vec<f64>,
    pivots: usize,
}

impl Tableau {
    fn new(lp: &LinearProgram) -> Self {
        let n = lp.cost.len();
        let m = lp.rows.len();
        let width = n + m + 1;
        let mut cells = vec![0.0; (m + 1) * width];
        let mut sign = vec![1.0; m];
        for i in 0..m {
            let s = if lp.rhs[i] < 0.0 { -1.0 } else { 1.0 };
            sign[i] = s;
            let row = &mut cells[i * width..(i + 1) * width];
            for (j, &a) in lp.rows[i].iter().enumerate() {
                row[j] = s * a;
            }
            row[n + i] = 1.0;
            row[width - 1] = s * lp.rhs[i];
        }
        Self {
            n,
            m,
            width,
            cells,
            basis: (n..n + m).collect(),
            sign,
            pivots: 0,
        }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.cells[i * self.width + j]
    }

    fn rhs_col(&self) -> usize {
        self.width - 1
    }

    fn set_objective(&mut self, cost: &[f64]) {
        // reduced costs d_j = c_j - c_B B^-1 A_j, last cell = -c_B x_B
        let (n, m, w) = (self.n, self.m, self.width);
        let mut obj = vec![0.0; w];
        obj[..n].copy_from_slice(&cost[..n]);
        for i in 0..m {
            let b = self.basis[i];
            let cb = if b < n { cost[b] } else { 0.0 };
            if cb != 0.0 {
                for j in 0..w {
                    obj[j] -= cb * self.cells[i * w + j];
                }
            }
        }
        self.cells[m * w..].copy_from_slice(&obj);
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let w = self.width;
        let p = self.at(r, e);
        for j in 0..w {
            self.cells[r * w + j] /= p;
        }
        self.cells[r * w + e] = 1.0;
        let (before, rest) = self.cells.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        for row in before.chunks_mut(w).chain(after.chunks_mut(w)) {
            let f = row[e];
            if f != 0.0 {
                for j in 0..w {
                    row[j] -= f * prow[j];
                }
                row[e] = 0.0;
            }
        }
        self.basis[r] = e;
        self.pivots += 1;
    }

    /// Runs simplex iterations on the current objective row; `allowed` bounds
    /// the entering column index.
    fn iterate(&mut self, allowed: usize, max_pivots: usize) -> Result<(), LpError> {
        let m = self.m;
        let rc = self.rhs_col();
        loop {
            let entering = (0..allowed).find(|&j| self.at(m, j) < -COST_EPS);
            let Some(e) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                let a = self.at(i, e);
                if a > PIVOT_EPS {
                    let ratio = self.at(i, rc) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            let tol = 1e-12 * (1.0 + br.abs());
                            if ratio < br - tol
                                || (ratio <= br + tol && self.basis[i] < self.basis[bi])
                            {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Err(LpError::Unbounded);
            };
            if self.pivots >= max_pivots {
                return Err(LpError::PivotLimit(max_pivots));
            }
            self.pivot(r, e);
        }
    }

    fn run(mut self, cost: &[f64], max_pivots: usize) -> Result<LpSolution, LpError> {
        let (n, m) = (self.n, self.m);
        let rc = self.rhs_col();

        // phase one: minimize the sum of artificials
        {
            let w = self.width;
            let mut obj = vec![0.0; w];
            for i in 0..m {
                for j in 0..w {
                    obj[j] -= self.cells[i * w + j];
                }
            }
            for o in obj.iter_mut().skip(n).take(m) {
                *o = 0.0;
            }
            self.cells[m * w..].copy_from_slice(&obj);
        }
        self.iterate(n, max_pivots)?;
        let residual = -self.at(m, rc);
        let scale = 1.0 + (0..m).map(|i| self.at(i, rc).abs()).fold(0.0, f64::max);
        if residual > 1e-9 * scale {
            return Err(LpError::Infeasible(residual));
        }

        // drive zero-level artificials out of the basis where possible
        for i in 0..m {
            if self.basis[i] >= n {
                if let Some(j) = (0..n).find(|&j| self.at(i, j).abs() > 1e-9) {
                    self.pivot(i, j);
                }
            }
        }

        // phase two
        let mut full_cost = cost.to_vec();
        full_cost.resize(n + m, 0.0);
        self.set_objective(&full_cost);
        self.iterate(n, max_pivots)?;

        let mut x = vec![0.0; n];
        for i in 0..m {
            let b = self.basis[i];
            if b < n {
                x[b] = self.at(i, rc).max(0.0);
            }
        }
        let objective = cost.iter().zip(&x).map(|(c, v)| c * v).sum();
        let duals = (0..m)
            .map(|i| -self.sign[i] * self.at(m, n + i))
            .collect();
        Ok(LpSolution {
            x,
            objective,
            duals,
            pivots: self.pivots,
        })
    }
}
