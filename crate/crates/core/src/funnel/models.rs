//! The model side of the search: interpolation surrogates for every black
//! box, the true functions for every white box, and the assembled gradients,
//! Jacobians and Lagrangian Hessian used by the step subproblems.

use nalgebra::{DMatrix, DVector};

use crate::interp::{Interpolator, InterpError, LagrangeBasis, SampleSet, SurrogateModel};
use crate::problem::{FnKind, SlackProblem};

use super::context::ActiveProblem;

/// Objective handle: a surrogate when the objective is a black box, the true
/// function and gradient otherwise.
pub enum ObjectiveModel {
    Surrogate(SurrogateModel),
    White,
}

pub struct ModelSet {
    pub objective: ObjectiveModel,
    /// One surrogate per black-box constraint, in constraint order.
    pub constraints: Vec<SurrogateModel>,
}

impl ModelSet {
    /// Fits surrogates for all black-box rows of the sample set and returns
    /// them with the Lagrange basis of the same factorization.
    pub fn build(
        set: &SampleSet,
        slack: &SlackProblem,
        variant: crate::interp::ModelVariant,
    ) -> Result<(ModelSet, LagrangeBasis), InterpError> {
        let interp = Interpolator::new(&set.points, set.cur, variant)?;
        let objective = match slack.parent.f_kind {
            FnKind::BlackBox => ObjectiveModel::Surrogate(interp.fit(&set.value_row(0))?),
            FnKind::WhiteBox => ObjectiveModel::White,
        };
        let mut constraints = Vec::with_capacity(slack.parent.q);
        for j in 0..slack.parent.q {
            constraints.push(interp.fit(&set.value_row(1 + j))?);
        }
        let basis = interp.lagrange()?;
        Ok((ModelSet { objective, constraints }, basis))
    }

    /// Objective model gradient in reduced coordinates.
    pub fn f_grad(&self, ap: &ActiveProblem, slack: &SlackProblem, xr: &DVector<f64>) -> DVector<f64> {
        match &self.objective {
            ObjectiveModel::Surrogate(m) => m.gradient(xr),
            ObjectiveModel::White => {
                let g = (slack.parent.f_grad.as_ref().expect("white objective has gradient"))(
                    ap.lift(xr).as_slice(),
                );
                ap.restrict(&g)
            }
        }
    }

    fn f_hessian(&self, n_red: usize) -> DMatrix<f64> {
        match &self.objective {
            ObjectiveModel::Surrogate(m) => m.hessian(),
            ObjectiveModel::White => DMatrix::zeros(n_red, n_red),
        }
    }

    /// Constraint model values `m^z(x) = (m^c(x), h(x))` at a reduced point.
    pub fn z_values(&self, ap: &ActiveProblem, slack: &SlackProblem, xr: &DVector<f64>) -> DVector<f64> {
        let m = slack.m;
        let q = slack.parent.q;
        let mut z = DVector::zeros(m);
        for j in 0..q {
            z[j] = self.constraints[j].value(xr);
        }
        if slack.parent.l > 0 {
            let hv = (slack.parent.h.as_ref().expect("l > 0 requires h"))(ap.lift(xr).as_slice());
            for j in 0..slack.parent.l {
                z[q + j] = hv[j];
            }
        }
        z
    }

    /// Jacobian of `m^z` with respect to the free x coordinates (`m x n_red`).
    pub fn jacobian(&self, ap: &ActiveProblem, slack: &SlackProblem, xr: &DVector<f64>) -> DMatrix<f64> {
        let m = slack.m;
        let q = slack.parent.q;
        let n_red = ap.n_red();
        let mut jac = DMatrix::zeros(m, n_red);
        for j in 0..q {
            let g = self.constraints[j].gradient(xr);
            for k in 0..n_red {
                jac[(j, k)] = g[k];
            }
        }
        if slack.parent.l > 0 {
            let full = (slack.parent.h_jac.as_ref().expect("l > 0 requires h_jac"))(
                ap.lift(xr).as_slice(),
            );
            for j in 0..slack.parent.l {
                for (k, &i) in ap.free.iter().enumerate() {
                    jac[(q + j, k)] = full[(j, i)];
                }
            }
        }
        jac
    }

    /// Hessian of the Lagrangian model in the (x, s) space: the x block is
    /// `H_f + sum_i mu_i Z_i` over the black-box constraint surrogates
    /// (white boxes supply first derivatives only); all slack blocks vanish.
    pub fn lagrangian_hessian(
        &self,
        ap: &ActiveProblem,
        slack: &SlackProblem,
        mu: &DVector<f64>,
    ) -> DMatrix<f64> {
        let n_red = ap.n_red();
        let m = slack.m;
        let mut h = self.f_hessian(n_red);
        for (j, cm) in self.constraints.iter().enumerate() {
            let w = mu[j];
            if w != 0.0 {
                h += cm.hessian() * w;
            }
        }
        let dim = n_red + m;
        let mut b = DMatrix::zeros(dim, dim);
        b.view_mut((0, 0), (n_red, n_red)).copy_from(&h);
        b
    }
}
