//! Least-squares Lagrange multiplier estimation. The stationarity residual is
//! minimized over sign-constrained bound multipliers and a free equality
//! multiplier block; inactive-bound multipliers are fixed at zero.

use nalgebra::{DMatrix, DVector};

use super::blls_solve;

/// Index sets of active bounds at the shifted point: slacks at `s + n_s`,
/// x at `x + n_x`.
#[derive(Debug, Clone, Default)]
pub struct ActiveBounds {
    pub lower_s: Vec<usize>,
    pub upper_s: Vec<usize>,
    pub lower_x: Vec<usize>,
    pub upper_x: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct MultiplierEstimate {
    /// Multipliers of the equality block `m^z(x, s) = 0`.
    pub mu: DVector<f64>,
    pub xi_s: DVector<f64>,
    pub tau_s: DVector<f64>,
    pub xi_x: DVector<f64>,
    pub tau_x: DVector<f64>,
}

/// Solves `min 1/2 ||g_n + J(x)' mu - I xi + I tau ...||^2` with nonnegative
/// bound multipliers via the active-set least-squares kernel. `g_n` has the
/// x block first (length `n`) then the slack block (length `m`); `jx` is the
/// `m x n` Jacobian of the constraint models with respect to x.
pub fn estimate_multipliers(
    g_n: &DVector<f64>,
    jx: &DMatrix<f64>,
    active: &ActiveBounds,
) -> MultiplierEstimate {
    let m = jx.nrows();
    let n = jx.ncols();
    debug_assert_eq!(g_n.len(), n + m);

    let ncols = m + active.upper_s.len() + active.lower_s.len() + active.upper_x.len()
        + active.lower_x.len();
    let mut a = DMatrix::zeros(n + m, ncols);
    // mu columns: [J(x)' ; -I]
    for i in 0..m {
        for r in 0..n {
            a[(r, i)] = jx[(i, r)];
        }
        a[(n + i, i)] = -1.0;
    }
    let mut col = m;
    for &j in &active.upper_s {
        a[(n + j, col)] = 1.0;
        col += 1;
    }
    for &j in &active.lower_s {
        a[(n + j, col)] = -1.0;
        col += 1;
    }
    for &i in &active.upper_x {
        a[(i, col)] = 1.0;
        col += 1;
    }
    for &i in &active.lower_x {
        a[(i, col)] = -1.0;
        col += 1;
    }

    let b = -g_n;
    let mut lo = DVector::from_element(ncols, 0.0);
    let mut hi = DVector::from_element(ncols, f64::INFINITY);
    for i in 0..m {
        lo[i] = f64::NEG_INFINITY;
        hi[i] = f64::INFINITY;
    }
    let sol = blls_solve(&a, &b, &lo, &hi, None);

    let mut est = MultiplierEstimate {
        mu: DVector::zeros(m),
        xi_s: DVector::zeros(m),
        tau_s: DVector::zeros(m),
        xi_x: DVector::zeros(n),
        tau_x: DVector::zeros(n),
    };
    for i in 0..m {
        est.mu[i] = sol.x[i];
    }
    let mut col = m;
    for &j in &active.upper_s {
        est.tau_s[j] = sol.x[col].max(0.0);
        col += 1;
    }
    for &j in &active.lower_s {
        est.xi_s[j] = sol.x[col].max(0.0);
        col += 1;
    }
    for &i in &active.upper_x {
        est.tau_x[i] = sol.x[col].max(0.0);
        col += 1;
    }
    for &i in &active.lower_x {
        est.xi_x[i] = sol.x[col].max(0.0);
        col += 1;
    }
    est
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_gradient_gives_zero_multipliers() {
        let g = DVector::zeros(3); // n=1, m=2
        let jx = DMatrix::from_row_slice(2, 1, &[1.0, -2.0]);
        let est = estimate_multipliers(&g, &jx, &ActiveBounds::default());
        assert!(est.mu.amax() < 1e-9);
        assert!(est.tau_s.amax() == 0.0 && est.xi_s.amax() == 0.0);
    }

    #[test]
    fn square_invertible_jacobian_solves_exactly() {
        // n = 2, m = 2; no active bounds. Stationarity asks
        //   g_x + J' mu = 0 (x block), -mu + g_s = 0 (slack block).
        let jx = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 1.0, 1.0]);
        let mu_true = DVector::from_vec(vec![0.5, -1.5]);
        let gx = -jx.transpose() * &mu_true;
        let g = DVector::from_vec(vec![gx[0], gx[1], mu_true[0], mu_true[1]]);
        let est = estimate_multipliers(&g, &jx, &ActiveBounds::default());
        assert_relative_eq!(est.mu[0], mu_true[0], epsilon = 1e-8);
        assert_relative_eq!(est.mu[1], mu_true[1], epsilon = 1e-8);
    }

    #[test]
    fn active_upper_x_bound_absorbs_gradient() {
        // n = 1, m = 0: residual is g + tau_x, tau_x >= 0; g = -3 at an
        // active upper bound gives tau_x = 3.
        let g = DVector::from_vec(vec![-3.0]);
        let jx = DMatrix::zeros(0, 1);
        let active = ActiveBounds {
            upper_x: vec![0],
            ..Default::default()
        };
        let est = estimate_multipliers(&g, &jx, &active);
        assert_relative_eq!(est.tau_x[0], 3.0, epsilon = 1e-8);
    }

    #[test]
    fn inactive_bounds_stay_zero() {
        let g = DVector::from_vec(vec![1.0, -2.0, 0.5]); // n=1, m=2
        let jx = DMatrix::from_row_slice(2, 1, &[1.0, 3.0]);
        let active = ActiveBounds {
            lower_s: vec![1],
            ..Default::default()
        };
        let est = estimate_multipliers(&g, &jx, &active);
        assert_eq!(est.xi_s[0], 0.0);
        assert_eq!(est.tau_s[0], 0.0);
        assert_eq!(est.tau_s[1], 0.0);
        assert!(est.xi_s[1] >= 0.0);
    }
}
