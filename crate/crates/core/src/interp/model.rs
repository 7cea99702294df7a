//! Surrogate model construction from a sample set: solve the interpolation
//! system in one of four ways (subbasis selection, minimum l2-norm, minimum
//! Frobenius norm of the Hessian, regression), all through one orthogonal
//! factorization of the system matrix.

use nalgebra::{DMatrix, DVector};

use super::basis::{cross_pairs, dim_linear, dim_quadratic, eval_monomial_gradients, eval_monomials, hessian_from_coeffs};
use super::{InterpError, ModelVariant};

/// Local coordinate frame: models are fitted in `u = (x - base) / scale` to
/// keep the system matrix well scaled regardless of the problem's units.
#[derive(Debug, Clone)]
pub struct ModelFrame {
    pub base: DVector<f64>,
    pub scale: f64,
}

impl ModelFrame {
    pub fn to_local(&self, x: &DVector<f64>) -> DVector<f64> {
        (x - &self.base) / self.scale
    }
}

/// One interpolating or regression polynomial with value, gradient and
/// Hessian accessors in original coordinates.
#[derive(Debug, Clone)]
pub struct SurrogateModel {
    pub n: usize,
    frame: ModelFrame,
    coeffs: DVector<f64>,
}

impl SurrogateModel {
    pub fn value(&self, x: &DVector<f64>) -> f64 {
        let u = self.frame.to_local(x);
        eval_monomials(self.n, self.coeffs.len(), &u).dot(&self.coeffs)
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let u = self.frame.to_local(x);
        let g = eval_monomial_gradients(self.n, self.coeffs.len(), &u);
        (g.transpose() * &self.coeffs) / self.frame.scale
    }

    pub fn hessian(&self) -> DMatrix<f64> {
        hessian_from_coeffs(self.n, &self.coeffs) / (self.frame.scale * self.frame.scale)
    }

    pub fn coefficients(&self) -> &DVector<f64> {
        &self.coeffs
    }
}

/// Basis of polynomials dual to the sample points (`l_i(y_j) = delta_ij` in
/// the interpolation sense for poised sets).
#[derive(Debug, Clone)]
pub struct LagrangeBasis {
    pub n: usize,
    frame: ModelFrame,
    /// Column `i` holds the coefficients of `l_i`.
    coeffs: DMatrix<f64>,
}

impl LagrangeBasis {
    pub fn len(&self) -> usize {
        self.coeffs.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.ncols() == 0
    }

    /// Values of every Lagrange polynomial at `x`.
    pub fn eval_all(&self, x: &DVector<f64>) -> DVector<f64> {
        let u = self.frame.to_local(x);
        let phi = eval_monomials(self.n, self.coeffs.nrows(), &u);
        self.coeffs.transpose() * phi
    }

    pub fn eval(&self, i: usize, x: &DVector<f64>) -> f64 {
        self.eval_all(x)[i]
    }

    /// Value at `x`, gradient and (constant) Hessian of `l_i`, in original
    /// coordinates.
    pub fn poly_parts(&self, i: usize, x: &DVector<f64>) -> (f64, DVector<f64>, DMatrix<f64>) {
        let col = self.coeffs.column(i).into_owned();
        let u = self.frame.to_local(x);
        let b = col.len();
        let val = eval_monomials(self.n, b, &u).dot(&col);
        let grad = (eval_monomial_gradients(self.n, b, &u).transpose() * &col) / self.frame.scale;
        let hess = hessian_from_coeffs(self.n, &col) / (self.frame.scale * self.frame.scale);
        (val, grad, hess)
    }
}

/// Factorization of the interpolation system for one sample set and variant;
/// fits one model per black-box function from shared factors.
pub struct Interpolator {
    n: usize,
    p1: usize,
    b_model: usize,
    variant: ModelVariant,
    frame: ModelFrame,
    /// Scaled system matrix for the model basis.
    m_model: DMatrix<f64>,
    svd: nalgebra::SVD<f64, nalgebra::Dyn, nalgebra::Dyn>,
    /// Cholesky-free KKT LU for minimum-Frobenius-norm fits.
    mfn: Option<MfnFactors>,
    sigma_max: f64,
}

struct MfnFactors {
    lu: nalgebra::FullPivLU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    m_quad_scaled: DMatrix<f64>,
    dinv: DVector<f64>,
}

const RANK_TOL: f64 = 1e-12;

/// Chooses the interpolation frame for a point set: centered at the current
/// iterate, scaled by the largest distance from it.
pub fn frame_for(points: &[DVector<f64>], cur: usize) -> ModelFrame {
    let base = points[cur].clone();
    let mut scale: f64 = 0.0;
    for p in points {
        scale = scale.max((p - &base).norm());
    }
    if !(scale > 0.0) || !scale.is_finite() {
        scale = 1.0;
    }
    ModelFrame { base, scale }
}

impl Interpolator {
    /// Builds the factorization. `points` must contain at least `n + 1`
    /// points; with exactly `n + 1` a linear model is fitted regardless of
    /// the variant.
    pub fn new(
        points: &[DVector<f64>],
        cur: usize,
        variant: ModelVariant,
    ) -> Result<Self, InterpError> {
        let p1 = points.len();
        let n = points[0].len();
        if p1 < n + 1 {
            return Err(InterpError::TooFewPoints);
        }
        let frame = frame_for(points, cur);
        let b_full = dim_quadratic(n);
        let b_model = if p1 == dim_linear(n) {
            dim_linear(n)
        } else {
            match variant {
                ModelVariant::Subbasis => p1.min(b_full),
                _ => b_full,
            }
        };

        let mut m_model = DMatrix::zeros(p1, b_model);
        for (r, p) in points.iter().enumerate() {
            let u = frame.to_local(p);
            m_model.row_mut(r).copy_from_slice(eval_monomials(n, b_model, &u).as_slice());
        }

        let svd = m_model.clone().svd(true, true);
        let sigma_max = svd.singular_values.max();
        let required = p1.min(b_model);
        let sigma_req = svd.singular_values[required - 1];
        if !(sigma_req > RANK_TOL * sigma_max) {
            return Err(InterpError::IllConditioned);
        }

        let mfn = if variant == ModelVariant::MinFrobenius && b_model > dim_linear(n) {
            Some(Self::mfn_factors(n, p1, points, &frame)?)
        } else {
            None
        };

        Ok(Interpolator {
            n,
            p1,
            b_model,
            variant,
            frame,
            m_model,
            svd,
            mfn,
            sigma_max,
        })
    }

    fn mfn_factors(
        n: usize,
        p1: usize,
        points: &[DVector<f64>],
        frame: &ModelFrame,
    ) -> Result<MfnFactors, InterpError> {
        let b_lin = dim_linear(n);
        let b_full = dim_quadratic(n);
        let nq = b_full - b_lin;
        let mut m_lin = DMatrix::zeros(p1, b_lin);
        let mut m_quad = DMatrix::zeros(p1, nq);
        for (r, p) in points.iter().enumerate() {
            let u = frame.to_local(p);
            let phi = eval_monomials(n, b_full, &u);
            for c in 0..b_lin {
                m_lin[(r, c)] = phi[c];
            }
            for c in 0..nq {
                m_quad[(r, c)] = phi[b_lin + c];
            }
        }
        // Weight so the minimized norm is exactly the Hessian Frobenius
        // norm: pure quadratic coefficients enter once, cross terms twice.
        let mut dinv = DVector::from_element(nq, 1.0);
        for (k, _) in cross_pairs(n).enumerate() {
            dinv[n + k] = 1.0 / std::f64::consts::SQRT_2;
        }
        let mut m_quad_scaled = m_quad;
        for c in 0..nq {
            let f = dinv[c];
            for r in 0..p1 {
                m_quad_scaled[(r, c)] *= f;
            }
        }
        let gram = &m_quad_scaled * m_quad_scaled.transpose();
        let dim = p1 + b_lin;
        let mut kkt = DMatrix::zeros(dim, dim);
        kkt.view_mut((0, 0), (p1, p1)).copy_from(&gram);
        kkt.view_mut((0, p1), (p1, b_lin)).copy_from(&m_lin);
        kkt.view_mut((p1, 0), (b_lin, p1))
            .copy_from(&m_lin.transpose());
        let lu = kkt.full_piv_lu();
        if lu.determinant() == 0.0 {
            return Err(InterpError::IllConditioned);
        }
        Ok(MfnFactors {
            lu,

            m_quad_scaled,
            dinv,
        })
    }

    pub fn frame(&self) -> &ModelFrame {
        &self.frame
    }

    /// Fits one model to the given per-point values.
    pub fn fit(&self, values: &[f64]) -> Result<SurrogateModel, InterpError> {
        debug_assert_eq!(values.len(), self.p1);
        let y = DVector::from_column_slice(values);
        let coeffs = match (&self.mfn, self.variant) {
            (Some(mfn), ModelVariant::MinFrobenius) => self.fit_mfn(mfn, &y)?,
            _ => self
                .svd
                .solve(&y, RANK_TOL * self.sigma_max)
                .map_err(|_| InterpError::IllConditioned)?,
        };
        Ok(SurrogateModel {
            n: self.n,
            frame: self.frame.clone(),
            coeffs,
        })
    }

    fn fit_mfn(&self, mfn: &MfnFactors, y: &DVector<f64>) -> Result<DVector<f64>, InterpError> {
        let b_lin = dim_linear(self.n);
        let dim = self.p1 + b_lin;
        let mut rhs = DVector::zeros(dim);
        rhs.rows_mut(0, self.p1).copy_from(y);
        let sol = mfn.lu.solve(&rhs).ok_or(InterpError::IllConditioned)?;
        let lambda = sol.rows(0, self.p1).into_owned();
        let alpha_lin = sol.rows(self.p1, b_lin).into_owned();
        let w = mfn.m_quad_scaled.transpose() * lambda;
        let b_full = dim_quadratic(self.n);
        let mut coeffs = DVector::zeros(b_full);
        coeffs.rows_mut(0, b_lin).copy_from(&alpha_lin);
        for c in 0..(b_full - b_lin) {
            coeffs[b_lin + c] = mfn.dinv[c] * w[c];
        }
        Ok(coeffs)
    }

    /// Lagrange basis dual to the sample points: the minimum-norm (or, past
    /// full degree, least-squares) solution per unit vector, sharing this
    /// factorization. Used for all geometry bookkeeping.
    pub fn lagrange(&self) -> Result<LagrangeBasis, InterpError> {
        let mut coeffs = DMatrix::zeros(self.b_model, self.p1);
        for i in 0..self.p1 {
            let mut e = DVector::zeros(self.p1);
            e[i] = 1.0;
            let col = self
                .svd
                .solve(&e, RANK_TOL * self.sigma_max)
                .map_err(|_| InterpError::IllConditioned)?;
            coeffs.set_column(i, &col);
        }
        Ok(LagrangeBasis {
            n: self.n,
            frame: self.frame.clone(),
            coeffs,
        })
    }

    /// Interpolation residual of a fitted model against its data.
    pub fn residual(&self, model: &SurrogateModel, values: &[f64]) -> f64 {
        let y = DVector::from_column_slice(values);
        let pred = &self.m_model * model.coefficients();
        (pred - y).amax()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pts(raw: &[&[f64]]) -> Vec<DVector<f64>> {
        raw.iter().map(|p| DVector::from_column_slice(p)).collect()
    }

    #[test]
    fn linear_reproduction_1d() {
        let points = pts(&[&[0.0], &[1.0]]);
        let interp = Interpolator::new(&points, 0, ModelVariant::MinL2).unwrap();
        let model = interp.fit(&[3.0, 5.0]).unwrap(); // f(y) = 3 + 2y
        assert_relative_eq!(model.value(&DVector::from_vec(vec![10.0])), 23.0, epsilon = 1e-9);
        assert_relative_eq!(model.gradient(&DVector::from_vec(vec![0.3]))[0], 2.0, epsilon = 1e-9);
    }

    #[test]
    fn quadratic_reproduction_1d_all_variants() {
        let points = pts(&[&[0.0], &[0.5], &[1.0]]);
        let f = |y: f64| y * y;
        let vals: Vec<f64> = points.iter().map(|p| f(p[0])).collect();
        for variant in [
            ModelVariant::Subbasis,
            ModelVariant::MinL2,
            ModelVariant::MinFrobenius,
            ModelVariant::Regression,
        ] {
            let interp = Interpolator::new(&points, 0, variant).unwrap();
            let model = interp.fit(&vals).unwrap();
            for t in [-1.0, 0.2, 2.0] {
                assert_relative_eq!(model.value(&DVector::from_vec(vec![t])), t * t, epsilon = 1e-8);
            }
            assert_relative_eq!(model.hessian()[(0, 0)], 2.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn underdetermined_variants_interpolate() {
        // n = 2, |Y| = 4: an underdetermined quadratic; both routes must
        // interpolate all four points even though coefficients differ.
        let points = pts(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &[0.6, 0.7]]);
        let f = |p: &DVector<f64>| p[0] * p[1];
        let vals: Vec<f64> = points.iter().map(f).collect();
        let mut fitted = Vec::new();
        for variant in [ModelVariant::MinL2, ModelVariant::Subbasis, ModelVariant::MinFrobenius] {
            let interp = Interpolator::new(&points, 0, variant).unwrap();
            let model = interp.fit(&vals).unwrap();
            for (p, v) in points.iter().zip(&vals) {
                assert!((model.value(p) - v).abs() <= 1e-10 * (1.0 + v.abs()));
            }
            fitted.push(model);
        }
        // min-l2 and subbasis genuinely differ on this data
        let d = (fitted[0].coefficients().rows(0, 3).clone_owned()
            - fitted[1].coefficients().rows(0, 3).clone_owned())
        .amax();
        assert!(d > 1e-8 || fitted[0].coefficients().len() != fitted[1].coefficients().len());
    }

    #[test]
    fn lagrange_delta_property_and_partition_of_unity() {
        let points = pts(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]);
        let interp = Interpolator::new(&points, 0, ModelVariant::MinL2).unwrap();
        let basis = interp.lagrange().unwrap();
        for (j, p) in points.iter().enumerate() {
            let vals = basis.eval_all(p);
            for i in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((vals[i] - want).abs() < 1e-8);
            }
        }
        // l0 = 1 - x1 - x2, l1 = x1, l2 = x2
        let x = DVector::from_vec(vec![0.3, 0.4]);
        let vals = basis.eval_all(&x);
        assert_relative_eq!(vals[0], 0.3, epsilon = 1e-9);
        assert_relative_eq!(vals[1], 0.3, epsilon = 1e-9);
        assert_relative_eq!(vals[2], 0.4, epsilon = 1e-9);
        assert_relative_eq!(vals.sum(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn collinear_points_are_ill_conditioned() {
        let points = pts(&[&[0.0, 0.0], &[0.5, 0.5], &[1.0, 1.0]]);
        assert!(matches!(
            Interpolator::new(&points, 0, ModelVariant::MinL2),
            Err(InterpError::IllConditioned)
        ));
    }

    #[test]
    fn mfn_minimizes_hessian_frobenius_norm() {
        // Interpolating 4 points of a function with zero Hessian must give a
        // (near) zero-Hessian MFN model.
        let points = pts(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]]);
        let vals: Vec<f64> = points.iter().map(|p| 1.0 + 2.0 * p[0] - p[1]).collect();
        let interp = Interpolator::new(&points, 0, ModelVariant::MinFrobenius).unwrap();
        let model = interp.fit(&vals).unwrap();
        assert!(model.hessian().amax() < 1e-9);
        let interp2 = Interpolator::new(&points, 0, ModelVariant::MinL2).unwrap();
        let m2 = interp2.fit(&vals).unwrap();
        // min-l2 spreads onto the quadratic block here; MFN must not.
        assert!(model.hessian().amax() <= m2.hessian().amax() + 1e-12);
    }
}
