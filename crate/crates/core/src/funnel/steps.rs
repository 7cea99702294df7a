//! Step subproblems of the local search: feasibility and optimality Cauchy
//! measures, the normal step (bound-constrained Gauss-Newton on the slack
//! residual), the tangent step (null-space quadratic, solved by LP when the
//! curvature vanishes and by projected gradients otherwise), and the
//! second-order correction.

use nalgebra::{DMatrix, DVector};

use crate::problem::SlackProblem;
use crate::subsolvers::{
    blls_solve, estimate_multipliers, lp_solve, spg_solve, ActiveBounds, LpProblem,
    MultiplierEstimate, SpgOptions, SubsolverError,
};

use super::context::ActiveProblem;
use super::models::ModelSet;
use super::FunnelParams;

/// Everything the step subproblems need at the current iterate.
pub struct StepEnv<'a> {
    pub ap: &'a ActiveProblem,
    pub slack: &'a SlackProblem,
    pub models: &'a ModelSet,
    pub x: &'a DVector<f64>,
    pub s: &'a DVector<f64>,
}

impl StepEnv<'_> {
    /// Model residual `m^z(x, s) = m^z(x) - s`.
    pub fn residual(&self) -> DVector<f64> {
        self.models.z_values(self.ap, self.slack, self.x) - self.s
    }

    pub fn jacobian_x(&self) -> DMatrix<f64> {
        self.models.jacobian(self.ap, self.slack, self.x)
    }

    /// Full Jacobian `[J(x) -I]` of the slack residual in (x, s).
    pub fn jacobian_xs(&self, jx: &DMatrix<f64>) -> DMatrix<f64> {
        let m = self.slack.m;
        let n = self.ap.n_red();
        let mut j = DMatrix::zeros(m, n + m);
        j.view_mut((0, 0), (m, n)).copy_from(jx);
        for i in 0..m {
            j[(i, n + i)] = -1.0;
        }
        j
    }

    /// Box for a displacement `(dx, ds)` from the iterate: shifted variable
    /// bounds intersected with an inf-norm ball of radius `ball`.
    pub fn shifted_box(&self, ball: f64) -> (DVector<f64>, DVector<f64>) {
        let n = self.ap.n_red();
        let m = self.slack.m;
        let mut lo = DVector::zeros(n + m);
        let mut hi = DVector::zeros(n + m);
        for k in 0..n {
            lo[k] = (self.ap.lo[k] - self.x[k]).max(-ball);
            hi[k] = (self.ap.hi[k] - self.x[k]).min(ball);
        }
        for j in 0..m {
            lo[n + j] = (self.slack.l_s[j] - self.s[j]).max(-ball);
            hi[n + j] = (self.slack.u_s[j] - self.s[j]).min(ball);
        }
        for i in 0..(n + m) {
            if lo[i] > 0.0 {
                lo[i] = 0.0;
            }
            if hi[i] < 0.0 {
                hi[i] = 0.0;
            }
        }
        (lo, hi)
    }
}

/// Feasibility Cauchy measure: how much the Gauss-Newton model of `v`
/// decreases along the projected steepest descent direction within the unit
/// ball and the bounds.
pub fn pi_v(env: &StepEnv, jx: &DMatrix<f64>) -> Result<f64, SubsolverError> {
    let r0 = env.residual();
    let j = env.jacobian_xs(jx);
    let cost = j.transpose() * &r0;
    let (lo, hi) = env.shifted_box(1.0);
    let lp = LpProblem {
        cost: cost.clone(),
        eq: DMatrix::zeros(0, cost.len()),
        lo,
        hi,
    };
    let sol = lp_solve(&lp).map_err(|_| SubsolverError::Infeasible)?;
    Ok((-cost.dot(&sol.x)).max(0.0))
}

/// Optimality Cauchy measure at a normal displacement `n`: LP over the
/// null space of the residual Jacobian intersected with the shifted bounds
/// and the unit ball. Returns the measure and the Cauchy direction.
pub fn pi_f(
    env: &StepEnv,
    jx: &DMatrix<f64>,
    g_n: &DVector<f64>,
    n_step: &DVector<f64>,
) -> Result<(f64, DVector<f64>), SubsolverError> {
    let nred = env.ap.n_red();
    let m = env.slack.m;
    let dim = nred + m;
    let mut lo = DVector::zeros(dim);
    let mut hi = DVector::zeros(dim);
    for k in 0..nred {
        lo[k] = (env.ap.lo[k] - env.x[k] - n_step[k]).max(-1.0);
        hi[k] = (env.ap.hi[k] - env.x[k] - n_step[k]).min(1.0);
    }
    for j in 0..m {
        lo[nred + j] = (env.slack.l_s[j] - env.s[j] - n_step[nred + j]).max(-1.0);
        hi[nred + j] = (env.slack.u_s[j] - env.s[j] - n_step[nred + j]).min(1.0);
    }
    for i in 0..dim {
        if lo[i] > 0.0 {
            lo[i] = 0.0;
        }
        if hi[i] < 0.0 {
            hi[i] = 0.0;
        }
    }
    let lp = LpProblem {
        cost: g_n.clone(),
        eq: env.jacobian_xs(jx),
        lo,
        hi,
    };
    let sol = lp_solve(&lp).map_err(|_| SubsolverError::Infeasible)?;
    Ok(((-g_n.dot(&sol.x)).max(0.0), sol.x))
}

pub struct NormalStep {
    pub n: DVector<f64>,
    pub n_inf: f64,
    /// Scaling bound `kappa_n ||m^z||` active on this step.
    pub scale_bound: f64,
}

/// Solves the normal-step least squares over the shifted bounds and the
/// inf-norm ball `min[Delta, kappa_n ||m^z||]`. The ball uses the composite
/// radius so the full step stays inside the trust-region intersection even
/// when the tangent step is skipped.
pub fn normal_step(env: &StepEnv, delta: f64, kappa_n: f64) -> NormalStep {
    let r0 = env.residual();
    let scale_bound = kappa_n * r0.norm();
    let ball = delta.min(scale_bound);
    let jx = env.jacobian_x();
    let a = env.jacobian_xs(&jx);
    let (lo, hi) = env.shifted_box(ball);
    let sol = blls_solve(&a, &(-&r0), &lo, &hi, None);
    let mut n = sol.x;
    for i in 0..n.len() {
        n[i] = n[i].clamp(lo[i], hi[i]);
    }
    let n_inf = n.amax();
    NormalStep {
        n,
        n_inf,
        scale_bound,
    }
}

pub struct TangentOutcome {
    pub t: DVector<f64>,
    pub pi_f: f64,
    pub multipliers: MultiplierEstimate,
    pub g_n: DVector<f64>,
    /// ||J t|| and norms for the trace invariants.
    pub jt_norm: f64,
    pub j_norm: f64,
}

/// Solves the tangent subproblem at `n`: minimize the quadratic SQO model in
/// the null space of `[J -I]` subject to shifted bounds and the composite
/// trust region. Also produces the optimality measure and fresh multiplier
/// estimates.
#[allow(clippy::too_many_arguments)]
pub fn tangent_step(
    env: &StepEnv,
    params: &FunnelParams,
    b: &DMatrix<f64>,
    n_step: &DVector<f64>,
    delta: f64,
    z_true_norm: f64,
) -> Result<TangentOutcome, SubsolverError> {
    let nred = env.ap.n_red();
    let m = env.slack.m;
    let dim = nred + m;
    let jx = env.jacobian_x();
    let j = env.jacobian_xs(&jx);
    let j_norm = j.norm();

    let mut g = DVector::zeros(dim);
    let fg = env.models.f_grad(env.ap, env.slack, env.x);
    for k in 0..nred {
        g[k] = fg[k];
    }
    let g_n = &g + b * n_step;

    // Active bounds at the shifted point for the multiplier estimation.
    let mut active = ActiveBounds::default();
    for k in 0..nred {
        let v = env.x[k] + n_step[k];
        if env.ap.lo[k].is_finite() && v - env.ap.lo[k] <= 1e-10 * (1.0 + env.ap.lo[k].abs()) {
            active.lower_x.push(k);
        } else if env.ap.hi[k].is_finite()
            && env.ap.hi[k] - v <= 1e-10 * (1.0 + env.ap.hi[k].abs())
        {
            active.upper_x.push(k);
        }
    }
    for jdx in 0..m {
        let v = env.s[jdx] + n_step[nred + jdx];
        if env.slack.l_s[jdx].is_finite()
            && v - env.slack.l_s[jdx] <= 1e-10 * (1.0 + env.slack.l_s[jdx].abs())
        {
            active.lower_s.push(jdx);
        } else if env.slack.u_s[jdx].is_finite()
            && env.slack.u_s[jdx] - v <= 1e-10 * (1.0 + env.slack.u_s[jdx].abs())
        {
            active.upper_s.push(jdx);
        }
    }
    let multipliers = estimate_multipliers(&g_n, &jx, &active);

    let (pi, cauchy) = pi_f(env, &jx, &g_n, n_step)?;

    let mut t = DVector::zeros(dim);
    if pi > params.omega_t(z_true_norm) {
        // Displacement box: shifted variable bounds and the trust-region
        // condition |n_i + t_i| <= delta.
        let mut lo = DVector::zeros(dim);
        let mut hi = DVector::zeros(dim);
        for k in 0..nred {
            lo[k] = (env.ap.lo[k] - env.x[k] - n_step[k]).max(-delta - n_step[k]);
            hi[k] = (env.ap.hi[k] - env.x[k] - n_step[k]).min(delta - n_step[k]);
        }
        for jdx in 0..m {
            lo[nred + jdx] =
                (env.slack.l_s[jdx] - env.s[jdx] - n_step[nred + jdx]).max(-delta - n_step[nred + jdx]);
            hi[nred + jdx] =
                (env.slack.u_s[jdx] - env.s[jdx] - n_step[nred + jdx]).min(delta - n_step[nred + jdx]);
        }
        for i in 0..dim {
            if lo[i] > 0.0 {
                lo[i] = 0.0;
            }
            if hi[i] < 0.0 {
                hi[i] = 0.0;
            }
        }

        if b.amax() <= params.b_norm_eps {
            let lp = LpProblem {
                cost: g_n.clone(),
                eq: j.clone(),
                lo: lo.clone(),
                hi: hi.clone(),
            };
            if let Ok(sol) = lp_solve(&lp) {
                t = sol.x;
            }
        } else if m == 0 {
            // No equality rows: the feasible set is just the box.
            let box_proj = {
                let lo = lo.clone();
                let hi = hi.clone();
                move |v: &DVector<f64>| {
                    Ok(DVector::from_fn(v.len(), |i, _| v[i].clamp(lo[i], hi[i])))
                }
            };
            let bq = b.clone();
            let gq = g_n.clone();
            let quad = move |tv: &DVector<f64>| {
                let bt = &bq * tv;
                (gq.dot(tv) + 0.5 * tv.dot(&bt), &gq + bt)
            };
            if let Ok(sol) = spg_solve(quad, box_proj, &DVector::zeros(dim), &SpgOptions::default())
            {
                t = sol.x;
            }
            for i in 0..dim {
                t[i] = t[i].clamp(lo[i], hi[i]);
            }
        } else {
            // Projection onto {J t = 0} via the pseudo-inverse, alternated
            // with the box through Dykstra's scheme.
            let jsvd = j.clone().svd(true, true);
            let null_proj = {
                let j = j.clone();
                move |v: &DVector<f64>| {
                    let rhs = &j * v;
                    match jsvd.solve(&rhs, 1e-12) {
                        Ok(corr) => v - corr,
                        Err(_) => v.clone(),
                    }
                }
            };
            let box_proj = {
                let lo = lo.clone();
                let hi = hi.clone();
                move |v: &DVector<f64>| {
                    DVector::from_fn(v.len(), |i, _| v[i].clamp(lo[i], hi[i]))
                }
            };
            let cap = params.dykstra_cap;
            let tol = params.dykstra_tol;
            let project = move |v: &DVector<f64>| {
                crate::subsolvers::dykstra_pair(v, &null_proj, &box_proj, cap, tol)
            };
            let bq = b.clone();
            let gq = g_n.clone();
            let quad = move |tv: &DVector<f64>| {
                let bt = &bq * tv;
                (gq.dot(tv) + 0.5 * tv.dot(&bt), &gq + bt)
            };
            match spg_solve(quad, project, &DVector::zeros(dim), &SpgOptions::default()) {
                Ok(sol) => t = sol.x,
                Err(_) => t = DVector::zeros(dim), // conservative fallback
            }
            // Keep the step exactly inside the box; the null-space residual
            // is checked by the caller through jt_norm.
            for i in 0..dim {
                t[i] = t[i].clamp(lo[i], hi[i]);
            }
        }
        // Cauchy backstop: exact 1-D minimization of the quadratic along the
        // projected Cauchy direction, which lies in the null space exactly.
        // This guarantees model decrease even when the projected-gradient
        // solve stalls on thin feasible cones.
        if cauchy.amax() > 0.0 {
            let mut alpha_max = f64::INFINITY;
            for i in 0..dim {
                if cauchy[i] > 0.0 {
                    alpha_max = alpha_max.min(hi[i] / cauchy[i]);
                } else if cauchy[i] < 0.0 {
                    alpha_max = alpha_max.min(lo[i] / cauchy[i]);
                }
            }
            if alpha_max > 0.0 && alpha_max.is_finite() {
                let curv = cauchy.dot(&(b * &cauchy));
                let slope = g_n.dot(&cauchy);
                let alpha = if curv > 0.0 {
                    (-slope / curv).clamp(0.0, alpha_max)
                } else {
                    alpha_max
                };
                let tc = alpha * &cauchy;
                let qc = g_n.dot(&tc) + 0.5 * tc.dot(&(b * &tc));
                let q_cur = g_n.dot(&t) + 0.5 * t.dot(&(b * &t));
                if qc < q_cur {
                    t = tc;
                }
            }
        }
        // Only keep genuine model decrease.
        let q = g_n.dot(&t) + 0.5 * t.dot(&(b * &t));
        if !(q < 0.0) {
            t = DVector::zeros(dim);
        }
    }

    let jt_norm = (&j * &t).norm();
    Ok(TangentOutcome {
        t,
        pi_f: pi,
        multipliers,
        g_n,
        jt_norm,
        j_norm,
    })
}

/// Second-order correction around a rejected trial point: a normal-type
/// least-squares step on the true residual at the trial, with the Jacobian
/// still taken at the iterate.
pub fn second_order_correction(
    env: &StepEnv,
    x_plus: &DVector<f64>,
    s_plus: &DVector<f64>,
    z_plus_true: &DVector<f64>,
    delta_z: f64,
    kappa_n: f64,
) -> DVector<f64> {
    let nred = env.ap.n_red();
    let m = env.slack.m;
    let r_plus = z_plus_true - s_plus;
    let ball = delta_z.min(kappa_n * r_plus.norm());
    let jx = env.jacobian_x();
    let a = env.jacobian_xs(&jx);
    let dim = nred + m;
    let mut lo = DVector::zeros(dim);
    let mut hi = DVector::zeros(dim);
    for k in 0..nred {
        lo[k] = (env.ap.lo[k] - x_plus[k]).max(-ball);
        hi[k] = (env.ap.hi[k] - x_plus[k]).min(ball);
    }
    for j in 0..m {
        lo[nred + j] = (env.slack.l_s[j] - s_plus[j]).max(-ball);
        hi[nred + j] = (env.slack.u_s[j] - s_plus[j]).min(ball);
    }
    for i in 0..dim {
        if lo[i] > 0.0 {
            lo[i] = 0.0;
        }
        if hi[i] < 0.0 {
            hi[i] = 0.0;
        }
    }
    let sol = blls_solve(&a, &(-&r_plus), &lo, &hi, None);
    let mut nhat = sol.x;
    for i in 0..dim {
        nhat[i] = nhat[i].clamp(lo[i], hi[i]);
    }
    nhat
}
