//! Dense two-phase simplex on box-constrained problems with homogeneous
//! equality rows. Bland's rule throughout, so the method terminates on the
//! tiny degenerate instances the step computations produce.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// `min g'x` subject to `J x = 0` and `lo <= x <= hi`. The box is always
/// bounded here because it is intersected with an inf-norm ball before the
/// kernel is called.
pub struct LpProblem {
    pub cost: DVector<f64>,
    /// Equality rows with zero right-hand side; may have zero rows.
    pub eq: DMatrix<f64>,
    pub lo: DVector<f64>,
    pub hi: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: DVector<f64>,
    pub value: f64,
    pub capped: bool,
}

#[derive(Debug, Error)]
pub enum LpError {
    #[error("infeasible linear program")]
    Infeasible,
    #[error("unbounded linear program")]
    Unbounded,
    #[error("inconsistent box (lo > hi)")]
    BadBox,
}

const PIVOT_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-9;

struct Tableau {
    t: DMatrix<f64>,
    basis: Vec<usize>,
    ncols: usize,
    rhs: usize,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let piv = self.t[(row, col)];
        for j in 0..=self.rhs {
            self.t[(row, j)] /= piv;
        }
        for i in 0..self.t.nrows() {
            if i == row {
                continue;
            }
            let factor = self.t[(i, col)];
            if factor != 0.0 {
                for j in 0..=self.rhs {
                    let upd = self.t[(row, j)] * factor;
                    self.t[(i, j)] -= upd;
                }
            }
        }
        self.basis[row] = col;
    }

    /// One simplex phase with Bland's rule. `allowed` filters entering
    /// columns. Returns false when the iteration cap was hit.
    fn run(&mut self, cost: &[f64], allowed: &dyn Fn(usize) -> bool, cap: usize) -> Result<bool, LpError> {
        for _ in 0..cap {
            // Reduced costs: c_j - c_B' T_j.
            let mut entering = None;
            for j in 0..self.ncols {
                if !allowed(j) || self.basis.contains(&j) {
                    continue;
                }
                let mut rc = cost[j];
                for (i, &b) in self.basis.iter().enumerate() {
                    if cost[b] != 0.0 {
                        rc -= cost[b] * self.t[(i, j)];
                    }
                }
                if rc < -PIVOT_TOL {
                    entering = Some(j);
                    break; // Bland: smallest index
                }
            }
            let Some(col) = entering else {
                return Ok(true);
            };
            // Ratio test, ties broken by smallest basic index (Bland).
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.t.nrows() {
                let a = self.t[(i, col)];
                if a > PIVOT_TOL {
                    let ratio = self.t[(i, self.rhs)] / a;
                    match leave {
                        None => leave = Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - FEAS_TOL
                                || (ratio < br + FEAS_TOL && self.basis[i] < self.basis[bi])
                            {
                                leave = Some((i, ratio));
                            }
                        }
                    }
                }
            }
            let Some((row, _)) = leave else {
                return Err(LpError::Unbounded);
            };
            self.pivot(row, col);
        }
        Ok(false)
    }
}

/// Solves the boxed LP exactly at a vertex via two-phase dense simplex.
pub fn lp_solve(p: &LpProblem) -> Result<LpSolution, LpError> {
    let n = p.cost.len();
    let me = p.eq.nrows();
    for i in 0..n {
        if p.lo[i] > p.hi[i] {
            return Err(LpError::BadBox);
        }
    }
    if n == 0 {
        return Ok(LpSolution {
            x: DVector::zeros(0),
            value: 0.0,
            capped: false,
        });
    }

    // Shift to y = x - lo >= 0 with y <= w; add slack v for the upper bound
    // rows and artificials for the (row-scaled) equality rows.
    let w = &p.hi - &p.lo;
    // Columns: y (n), v (n), artificials (me). Rows: me equality + n bound.
    let ncols = 2 * n + me;
    let rhs = ncols;
    let nrows = me + n;
    let mut t = DMatrix::zeros(nrows, ncols + 1);
    let mut basis = vec![0usize; nrows];

    for r in 0..me {
        let mut scale: f64 = 0.0;
        for j in 0..n {
            scale = scale.max(p.eq[(r, j)].abs());
        }
        if scale == 0.0 {
            scale = 1.0;
        }
        // J y = -J lo, scaled and sign-normalized so rhs >= 0.
        let mut b = 0.0;
        for j in 0..n {
            b -= p.eq[(r, j)] * p.lo[j];
        }
        let sign = if b / scale < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[(r, j)] = sign * p.eq[(r, j)] / scale;
        }
        t[(r, rhs)] = sign * b / scale;
        t[(r, 2 * n + r)] = 1.0;
        basis[r] = 2 * n + r;
    }
    for j in 0..n {
        let r = me + j;
        t[(r, j)] = 1.0;
        t[(r, n + j)] = 1.0;
        t[(r, rhs)] = w[j];
        basis[r] = n + j;
    }

    let mut tab = Tableau {
        t,
        basis,
        ncols,
        rhs,
    };
    let cap = 100 * (ncols + nrows);

    // Phase 1: drive the artificials to zero.
    if me > 0 {
        let mut c1 = vec![0.0; ncols];
        for a in 0..me {
            c1[2 * n + a] = 1.0;
        }
        let finished = tab.run(&c1, &|_| true, cap)?;
        let mut infeas = 0.0;
        for (i, &b) in tab.basis.iter().enumerate() {
            if b >= 2 * n {
                infeas += tab.t[(i, rhs)];
            }
        }
        if !finished || infeas > FEAS_TOL * (1.0 + p.lo.amax().max(p.hi.amax())) {
            if !finished {
                return Ok(read_solution(&tab, p, n, true));
            }
            return Err(LpError::Infeasible);
        }
        // Pivot remaining artificials out, or blank redundant rows.
        for i in 0..nrows {
            if tab.basis[i] >= 2 * n {
                let col = (0..2 * n).find(|&j| tab.t[(i, j)].abs() > PIVOT_TOL);
                match col {
                    Some(j) => tab.pivot(i, j),
                    None => {
                        for j in 0..=rhs {
                            tab.t[(i, j)] = 0.0;
                        }
                    }
                }
            }
        }
    }

    // Phase 2 on the real cost, artificials barred from entering.
    let mut c2 = vec![0.0; ncols];
    for j in 0..n {
        c2[j] = p.cost[j];
    }
    let barred = 2 * n;
    let finished = tab.run(&c2, &|j| j < barred, cap)?;
    Ok(read_solution(&tab, p, n, !finished))
}

fn read_solution(tab: &Tableau, p: &LpProblem, n: usize, capped: bool) -> LpSolution {
    let mut x = p.lo.clone();
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] = p.lo[b] + tab.t[(i, tab.rhs)];
        }
    }
    for i in 0..n {
        x[i] = x[i].clamp(p.lo[i], p.hi[i]);
    }
    let value = p.cost.dot(&x);
    LpSolution { x, value, capped }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pure_box_lp() {
        let p = LpProblem {
            cost: DVector::from_vec(vec![1.0, 1.0]),
            eq: DMatrix::zeros(0, 2),
            lo: DVector::from_vec(vec![-1.0, -1.0]),
            hi: DVector::from_vec(vec![1.0, 1.0]),
        };
        let sol = lp_solve(&p).unwrap();
        assert_relative_eq!(sol.value, -2.0, epsilon = 1e-12);
        assert_relative_eq!(sol.x[0], -1.0, epsilon = 1e-12);
        assert_relative_eq!(sol.x[1], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_cost_gives_zero_value() {
        let p = LpProblem {
            cost: DVector::zeros(3),
            eq: DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]),
            lo: DVector::from_vec(vec![-1.0, -1.0, -1.0]),
            hi: DVector::from_vec(vec![1.0, 1.0, 1.0]),
        };
        let sol = lp_solve(&p).unwrap();
        assert_relative_eq!(sol.value, 0.0, epsilon = 1e-12);
        assert!((sol.x[0] + sol.x[1] + sol.x[2]).abs() < 1e-9);
    }

    #[test]
    fn equality_segment_endpoints() {
        // x1 = x2 on [-1,1]^2: minimizer is +-(1,1) depending on sign of cost.
        for (g, want) in [(1.0, -1.0), (-1.0, 1.0)] {
            let p = LpProblem {
                cost: DVector::from_vec(vec![g, g]),
                eq: DMatrix::from_row_slice(1, 2, &[1.0, -1.0]),
                lo: DVector::from_vec(vec![-1.0, -1.0]),
                hi: DVector::from_vec(vec![1.0, 1.0]),
            };
            let sol = lp_solve(&p).unwrap();
            assert_relative_eq!(sol.x[0], want, epsilon = 1e-9);
            assert_relative_eq!(sol.x[1], want, epsilon = 1e-9);
        }
    }

    #[test]
    fn redundant_equality_rows() {
        // Duplicate rows must not trip the phase-1 cleanup.
        let p = LpProblem {
            cost: DVector::from_vec(vec![2.0, -1.0]),
            eq: DMatrix::from_row_slice(2, 2, &[1.0, -1.0, 2.0, -2.0]),
            lo: DVector::from_vec(vec![-1.0, -1.0]),
            hi: DVector::from_vec(vec![1.0, 1.0]),
        };
        let sol = lp_solve(&p).unwrap();
        assert_relative_eq!(sol.value, -1.0, epsilon = 1e-9);
    }

    #[test]
    fn degenerate_box_component() {
        let p = LpProblem {
            cost: DVector::from_vec(vec![1.0, 1.0]),
            eq: DMatrix::zeros(0, 2),
            lo: DVector::from_vec(vec![0.5, -1.0]),
            hi: DVector::from_vec(vec![0.5, 1.0]),
        };
        let sol = lp_solve(&p).unwrap();
        assert_relative_eq!(sol.x[0], 0.5, epsilon = 1e-12);
        assert_relative_eq!(sol.x[1], -1.0, epsilon = 1e-12);
    }
}
