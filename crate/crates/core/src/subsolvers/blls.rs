//! Bound-constrained linear least squares by an active-set method: projected
//! Cauchy steps fix the working set, then an SVD solve on the free variables
//! refines it. Intended for small dense problems only.

use nalgebra::{DMatrix, DVector};

const SVD_RCOND: f64 = 1e-12;
const ACTIVE_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct BllsSolution {
    pub x: DVector<f64>,
    pub active_lower: Vec<usize>,
    pub active_upper: Vec<usize>,
    /// Set when the iteration cap was reached; `x` is the best point found.
    pub capped: bool,
}

fn clamp(x: &mut DVector<f64>, lo: &DVector<f64>, hi: &DVector<f64>) {
    for i in 0..x.len() {
        x[i] = x[i].clamp(lo[i], hi[i]);
    }
}

fn objective(a: &DMatrix<f64>, b: &DVector<f64>, x: &DVector<f64>) -> f64 {
    0.5 * (a * x - b).norm_squared()
}

/// Generalized Cauchy point: exact minimization of the quadratic along the
/// projected steepest-descent path.
fn cauchy_point(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    lo: &DVector<f64>,
    hi: &DVector<f64>,
    x: &DVector<f64>,
    g: &DVector<f64>,
) -> DVector<f64> {
    let n = x.len();
    let mut d = DVector::zeros(n);
    for i in 0..n {
        let gi = g[i];
        let blocked_low = x[i] <= lo[i] + 0.0 && gi > 0.0;
        let blocked_high = x[i] >= hi[i] - 0.0 && gi < 0.0;
        if !(blocked_low || blocked_high) {
            d[i] = -gi;
        }
    }
    let mut breaks: Vec<(f64, usize)> = Vec::new();
    for i in 0..n {
        if d[i] < 0.0 && lo[i].is_finite() {
            breaks.push(((x[i] - lo[i]) / -d[i], i));
        } else if d[i] > 0.0 && hi[i].is_finite() {
            breaks.push(((hi[i] - x[i]) / d[i], i));
        }
    }
    breaks.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());

    let mut xc = x.clone();
    let mut t_cur = 0.0;
    let mut bi = 0;
    loop {
        let t_next = if bi < breaks.len() {
            breaks[bi].0
        } else {
            f64::INFINITY
        };
        let r = a * &xc - b;
        let ad = a * &d;
        let slope = r.dot(&ad);
        let curv = ad.norm_squared();
        if slope >= -1e-300 {
            break;
        }
        let t_star = if curv > 0.0 { -slope / curv } else { f64::INFINITY };
        let seg = t_next - t_cur;
        if t_star < seg {
            xc.axpy(t_star, &d, 1.0);
            break;
        }
        if !t_next.is_finite() {
            // cannot happen for least squares (curv = 0 implies slope = 0)
            break;
        }
        xc.axpy(seg, &d, 1.0);
        // Pin every coordinate whose breakpoint was just crossed.
        while bi < breaks.len() && breaks[bi].0 <= t_next + 1e-300 {
            let i = breaks[bi].1;
            xc[i] = if d[i] < 0.0 { lo[i] } else { hi[i] };
            d[i] = 0.0;
            bi += 1;
        }
        t_cur = t_next;
        if d.iter().all(|&v| v == 0.0) {
            break;
        }
    }
    clamp(&mut xc, lo, hi);
    xc
}

/// Minimum-norm least-squares solve restricted to the free variables.
fn subspace_solve(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    x: &DVector<f64>,
    free: &[usize],
) -> DVector<f64> {
    let m = a.nrows();
    let mut rhs = b.clone();
    for (i, xi) in x.iter().enumerate() {
        if !free.contains(&i) && *xi != 0.0 {
            for r in 0..m {
                rhs[r] -= a[(r, i)] * xi;
            }
        }
    }
    let af = DMatrix::from_fn(m, free.len(), |r, c| a[(r, free[c])]);
    let svd = af.svd(true, true);
    let sol = svd.solve(&rhs, SVD_RCOND * svd.singular_values.max()).unwrap();
    let mut out = x.clone();
    for (c, &i) in free.iter().enumerate() {
        out[i] = sol[c];
    }
    out
}

/// First-order optimal point of `min 1/2 ||Ax - b||^2` over the box.
/// The projected gradient at the result has norm `<= 1e-9 (1 + ||A'b||)`.
pub fn blls_solve(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    lo: &DVector<f64>,
    hi: &DVector<f64>,
    x0: Option<&DVector<f64>>,
) -> BllsSolution {
    let n = a.ncols();
    let mut x = match x0 {
        Some(v) => v.clone(),
        None => DVector::zeros(n),
    };
    clamp(&mut x, lo, hi);
    let gref = 1.0 + (a.transpose() * b).norm();
    let cap = 50 * n.max(1);
    let mut capped = true;

    for _ in 0..cap {
        let g = a.transpose() * (a * &x - b);
        // KKT residual: the gradient with the components pointing out of the
        // box at active bounds removed.
        let mut pg_norm2 = 0.0;
        for i in 0..n {
            let at_lo = lo[i].is_finite() && x[i] - lo[i] <= ACTIVE_TOL * (1.0 + lo[i].abs());
            let at_hi = hi[i].is_finite() && hi[i] - x[i] <= ACTIVE_TOL * (1.0 + hi[i].abs());
            let pg = if at_lo {
                g[i].min(0.0)
            } else if at_hi {
                g[i].max(0.0)
            } else {
                g[i]
            };
            pg_norm2 += pg * pg;
        }
        if pg_norm2.sqrt() <= 1e-9 * gref {
            capped = false;
            break;
        }

        let xc = cauchy_point(a, b, lo, hi, &x, &g);
        let free: Vec<usize> = (0..n)
            .filter(|&i| xc[i] > lo[i] + ACTIVE_TOL && xc[i] < hi[i] - ACTIVE_TOL)
            .collect();
        let mut best = xc.clone();
        if !free.is_empty() {
            let cand = subspace_solve(a, b, &xc, &free);
            // Longest feasible step from the Cauchy point toward the
            // subspace minimizer.
            let mut alpha: f64 = 1.0;
            for &i in &free {
                let d = cand[i] - xc[i];
                if d > 0.0 && hi[i].is_finite() {
                    alpha = alpha.min((hi[i] - xc[i]) / d);
                } else if d < 0.0 && lo[i].is_finite() {
                    alpha = alpha.min((lo[i] - xc[i]) / d);
                }
            }
            let mut trial = xc.clone();
            trial.axpy(alpha.max(0.0), &(&cand - &xc), 1.0);
            clamp(&mut trial, lo, hi);
            if objective(a, b, &trial) <= objective(a, b, &best) {
                best = trial;
            }
        }
        if objective(a, b, &best) >= objective(a, b, &x) - 1e-300 {
            // No measurable progress; accept and stop.
            x = best;
            capped = false;
            break;
        }
        x = best;
    }

    let mut active_lower = Vec::new();
    let mut active_upper = Vec::new();
    for i in 0..n {
        if lo[i].is_finite() && x[i] - lo[i] <= ACTIVE_TOL * (1.0 + lo[i].abs()) {
            active_lower.push(i);
        } else if hi[i].is_finite() && hi[i] - x[i] <= ACTIVE_TOL * (1.0 + hi[i].abs()) {
            active_upper.push(i);
        }
    }
    BllsSolution {
        x,
        active_lower,
        active_upper,
        capped,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identity_projection() {
        let a = DMatrix::identity(2, 2);
        let b = DVector::from_vec(vec![2.0, -3.0]);
        let lo = DVector::from_vec(vec![0.0, 0.0]);
        let hi = DVector::from_vec(vec![1.0, 1.0]);
        let sol = blls_solve(&a, &b, &lo, &hi, None);
        assert_relative_eq!(sol.x[0], 1.0, epsilon = 1e-10);
        assert_relative_eq!(sol.x[1], 0.0, epsilon = 1e-10);
        assert_eq!(sol.active_upper, vec![0]);
        assert_eq!(sol.active_lower, vec![1]);
    }

    #[test]
    fn unconstrained_matches_pseudoinverse() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 0.5, -1.0, 2.0, 0.25]);
        let b = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let lo = DVector::from_vec(vec![f64::NEG_INFINITY; 2]);
        let hi = DVector::from_vec(vec![f64::INFINITY; 2]);
        let sol = blls_solve(&a, &b, &lo, &hi, None);
        let svd = a.clone().svd(true, true);
        let want = svd.solve(&b, 1e-12).unwrap();
        assert_relative_eq!(sol.x[0], want[0], epsilon = 1e-8);
        assert_relative_eq!(sol.x[1], want[1], epsilon = 1e-8);
    }

    #[test]
    fn pinned_variable_stays_pinned() {
        let a = DMatrix::identity(2, 2);
        let b = DVector::from_vec(vec![5.0, 5.0]);
        let lo = DVector::from_vec(vec![1.0, -10.0]);
        let hi = DVector::from_vec(vec![1.0, 10.0]);
        let sol = blls_solve(&a, &b, &lo, &hi, None);
        assert_relative_eq!(sol.x[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(sol.x[1], 5.0, epsilon = 1e-9);
    }
}
