//! Monomial basis of the quadratic polynomial space, ordered constant,
//! linear, pure quadratics, then cross terms. Pure quadratics carry a 1/2 so
//! that quadratic-block coefficients are exactly Hessian entries.

use nalgebra::{DMatrix, DVector};

pub fn dim_linear(n: usize) -> usize {
    n + 1
}

pub fn dim_diagonal(n: usize) -> usize {
    2 * n + 1
}

pub fn dim_quadratic(n: usize) -> usize {
    (n + 1) * (n + 2) / 2
}

/// Cross-term index pairs in lexicographic order: (0,1), (0,2), ..., (1,2), ...
pub fn cross_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

/// Evaluates the first `b` monomials at `u`.
pub fn eval_monomials(n: usize, b: usize, u: &DVector<f64>) -> DVector<f64> {
    let mut phi = DVector::zeros(b);
    phi[0] = 1.0;
    for i in 0..n {
        if 1 + i < b {
            phi[1 + i] = u[i];
        }
    }
    for i in 0..n {
        let k = 1 + n + i;
        if k < b {
            phi[k] = 0.5 * u[i] * u[i];
        }
    }
    for (k, (i, j)) in cross_pairs(n).enumerate() {
        let idx = 1 + 2 * n + k;
        if idx < b {
            phi[idx] = u[i] * u[j];
        }
    }
    phi
}

/// Gradient of the first `b` monomials at `u`: a `b x n` matrix of partials.
pub fn eval_monomial_gradients(n: usize, b: usize, u: &DVector<f64>) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(b, n);
    for i in 0..n {
        if 1 + i < b {
            g[(1 + i, i)] = 1.0;
        }
        let k = 1 + n + i;
        if k < b {
            g[(k, i)] = u[i];
        }
    }
    for (k, (i, j)) in cross_pairs(n).enumerate() {
        let idx = 1 + 2 * n + k;
        if idx < b {
            g[(idx, i)] = u[j];
            g[(idx, j)] = u[i];
        }
    }
    g
}

/// Assembles the (constant) Hessian of a polynomial with coefficients
/// `coeffs` over the first `b` monomials.
pub fn hessian_from_coeffs(n: usize, coeffs: &DVector<f64>) -> DMatrix<f64> {
    let b = coeffs.len();
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        let k = 1 + n + i;
        if k < b {
            h[(i, i)] = coeffs[k];
        }
    }
    for (k, (i, j)) in cross_pairs(n).enumerate() {
        let idx = 1 + 2 * n + k;
        if idx < b {
            h[(i, j)] = coeffs[idx];
            h[(j, i)] = coeffs[idx];
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_is_constant_linear_pure_cross() {
        let u = DVector::from_vec(vec![2.0, 3.0]);
        let phi = eval_monomials(2, dim_quadratic(2), &u);
        assert_eq!(phi.as_slice(), &[1.0, 2.0, 3.0, 2.0, 4.5, 6.0]);
    }

    #[test]
    fn diagonal_prefix_has_no_cross_terms() {
        assert_eq!(dim_diagonal(3), 7);
        let u = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let phi = eval_monomials(3, dim_diagonal(3), &u);
        assert_eq!(phi.len(), 7);
        assert_eq!(phi[6], 4.5); // (1/2) * 3^2, a pure quadratic
    }

    #[test]
    fn hessian_roundtrip() {
        // p(u) = 1 + u0 + 2*(u0^2/2) + 5*u0*u1 -> H = [[2,5],[5,0]]
        let coeffs = DVector::from_vec(vec![1.0, 1.0, 0.0, 2.0, 0.0, 5.0]);
        let h = hessian_from_coeffs(2, &coeffs);
        assert_eq!(h[(0, 0)], 2.0);
        assert_eq!(h[(0, 1)], 5.0);
        assert_eq!(h[(1, 1)], 0.0);
    }
}
