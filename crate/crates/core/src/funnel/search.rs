//! The local-search driver: assembles subspace minimization, the criticality
//! step, normal and tangent steps, iteration classification with funnel and
//! trust-region updates, the second-order correction, and the
//! self-correcting interpolation-set maintenance into one loop.

use nalgebra::DVector;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::interp::{
    initial_points, lambda_from_basis, repair_points, InitDegree, LagrangeBasis, Region,
    SampleSet, update_interpolation_set,
};
use crate::problem::{slack_violation, EvalError, EvaluationLedger, SlackProblem};
use crate::subsolvers::SubsolverError;

use super::context::{ActiveProblem, SearchCtx};
use super::models::ModelSet;
use super::steps::{self, StepEnv};
use super::{FunnelParams, IterationRecord, LocalSearchOutcome, StopReason};

enum SearchFail {
    Budget,
    Geometry,
}

impl From<EvalError> for SearchFail {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::BudgetExhausted => SearchFail::Budget,
            // Internal callers clamp into the box, so this is unreachable in
            // practice; treat it like dead geometry rather than panicking.
            EvalError::DomainViolation => SearchFail::Geometry,
        }
    }
}

struct InnerDone {
    x_full: DVector<f64>,
    s: DVector<f64>,
    stop: StopReason,
    v_max: f64,
    mu: DVector<f64>,
    pi_f: Option<f64>,
}

struct Search<'a, 'b> {
    ctx: &'b SearchCtx<'a>,
    ap: ActiveProblem,
    depth: usize,
    rng: ChaCha8Rng,
    set: SampleSet,
    models: ModelSet,
    basis: LagrangeBasis,
    x: DVector<f64>,
    s: DVector<f64>,
    f: f64,
    z: DVector<f64>,
    delta_f: f64,
    delta_z: f64,
    v_max: f64,
    mu: DVector<f64>,
    nu_f: usize,
    nu_z: usize,
    nu_cap: usize,
    eps_i: f64,
    theta: Option<DVector<f64>>,
    pi_f_prev: f64,
    pi_f_seen: bool,
    last_d_norm: Option<f64>,
    mu_streak: usize,
    k: usize,
}

const DELTA_FLOOR: f64 = 1e-14;

/// Runs one trust-funnel local search from `x0` (clamped into the x box),
/// charging at most `maxeval_ls` fresh black-box calls to the ledger.
pub fn local_search(
    slack: &SlackProblem,
    ledger: &EvaluationLedger,
    params: &FunnelParams,
    x0: &DVector<f64>,
    maxeval_ls: usize,
    seed: u64,
) -> LocalSearchOutcome {
    let ctx = SearchCtx::new(slack, ledger, params, maxeval_ls);
    let mut x0 = x0.clone();
    slack.clamp_x(&mut x0);

    let fail_outcome = |ctx: &SearchCtx, stop: StopReason| LocalSearchOutcome {
        x: x0.clone(),
        s: DVector::zeros(slack.m),
        f: f64::INFINITY,
        cv: f64::INFINITY,
        multipliers: DVector::zeros(slack.m),
        pi_f: None,
        evaluations: ctx.used(),
        stop,
        converged: false,
        trace: ctx.trace.borrow().to_vec(),
    };

    let ev0 = match ctx.eval(&x0) {
        Ok(e) => e,
        Err(EvalError::BudgetExhausted) => return fail_outcome(&ctx, StopReason::BudgetExhausted),
        Err(EvalError::DomainViolation) => return fail_outcome(&ctx, StopReason::Stalled),
    };
    let s0 = slack.initial_slack(&ev0.z);
    let v0 = slack_violation(&ev0.z, &s0);
    let v_max0 = params.kappa_za.max(params.kappa_zr * v0);

    let ap = ActiveProblem::full_space(slack, &x0);
    let xr0 = ap.restrict(&x0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let done = match Search::create(
        &ctx,
        ap,
        0,
        &mut rng,
        xr0,
        s0,
        params.delta0_f,
        params.delta0_z,
        v_max0,
        DVector::zeros(slack.m),
        params.init_degree,
        params.delta0_f.min(params.delta0_z),
    ) {
        Ok(mut search) => search.run(),
        Err(SearchFail::Budget) => {
            let mut out = fail_outcome(&ctx, StopReason::BudgetExhausted);
            out.s = s0_of(slack, ledger, &x0);
            out.f = ev0.f;
            out.cv = slack.constraint_violation(&ev0.z);
            out.x = x0.clone();
            return out;
        }
        Err(SearchFail::Geometry) => {
            let mut out = fail_outcome(&ctx, StopReason::Stalled);
            out.f = ev0.f;
            out.cv = slack.constraint_violation(&ev0.z);
            return out;
        }
    };

    let eval_at_end = ledger
        .evaluate(slack, &done.x_full)
        .expect("final iterate is cached");
    let trace = ctx.trace.borrow().to_vec();
    LocalSearchOutcome {
        cv: slack.constraint_violation(&eval_at_end.z),
        f: eval_at_end.f,
        x: done.x_full,
        s: done.s,
        multipliers: done.mu,
        pi_f: done.pi_f,
        evaluations: ctx.used(),
        stop: done.stop,
        converged: done.stop == StopReason::Criticality,
        trace,
    }
}

fn s0_of(slack: &SlackProblem, ledger: &EvaluationLedger, x0: &DVector<f64>) -> DVector<f64> {
    match ledger.evaluate(slack, x0) {
        Ok(e) => slack.initial_slack(&e.z),
        Err(_) => DVector::zeros(slack.m),
    }
}

impl<'a, 'b> Search<'a, 'b> {
    #[allow(clippy::too_many_arguments)]
    fn create(
        ctx: &'b SearchCtx<'a>,
        ap: ActiveProblem,
        depth: usize,
        rng: &mut ChaCha8Rng,
        xr: DVector<f64>,
        s: DVector<f64>,
        delta_f: f64,
        delta_z: f64,
        v_max: f64,
        mu: DVector<f64>,
        degree: InitDegree,
        init_radius: f64,
    ) -> Result<Self, SearchFail> {
        let params = ctx.params;
        let pts = initial_points(
            &xr,
            init_radius.max(1e-8),
            params.init_mode,
            degree,
            &ap.lo,
            &ap.hi,
            params.lambda_target,
            rng,
        )
        .map_err(|_| SearchFail::Geometry)?;

        let mut set = SampleSet {
            points: Vec::new(),
            values: Vec::new(),
            cur: 0,
            p_max: params.variant.p_max(ap.n_red()),
        };
        for p in pts {
            let xf = ap.lift(&p);
            let ev = ctx.eval(&xf)?;
            set.push(p, ctx.value_row(&ev));
        }
        set.cur = 0;

        let ev0 = ctx.eval(&ap.lift(&xr))?;
        let nu_cap = params.nu_max_factor * ctx.slack.n();
        let mut search = Search {
            ctx,
            ap,
            depth,
            rng: ChaCha8Rng::seed_from_u64(rng.next_u64()),
            set,
            models: ModelSet {
                objective: super::models::ObjectiveModel::White,
                constraints: Vec::new(),
            },
            // Replaced by rebuild_models below.
            basis: placeholder_basis(),
            x: xr,
            s,
            f: ev0.f,
            z: ev0.z.clone(),
            delta_f,
            delta_z,
            v_max,
            mu,
            nu_f: 0,
            nu_z: 0,
            nu_cap,
            eps_i: params.epsilon0,
            theta: None,
            pi_f_prev: f64::INFINITY,
            pi_f_seen: false,
            last_d_norm: None,
            mu_streak: 0,
            k: 0,
        };
        search.rebuild_models()?;
        search.pi_f_prev = search.compute_pi_f0().unwrap_or(f64::INFINITY);
        search.pi_f_seen = search.pi_f_prev.is_finite();
        Ok(search)
    }

    fn params(&self) -> &FunnelParams {
        self.ctx.params
    }

    fn delta(&self) -> f64 {
        self.delta_f.min(self.delta_z)
    }

    fn v_current(&self) -> f64 {
        slack_violation(&self.z, &self.s)
    }

    fn true_residual_norm(&self) -> f64 {
        (&self.z - &self.s).norm()
    }

    fn done(&self, stop: StopReason) -> InnerDone {
        InnerDone {
            x_full: self.ap.lift(&self.x),
            s: self.s.clone(),
            stop,
            v_max: self.v_max,
            mu: self.mu.clone(),
            pi_f: if self.pi_f_seen {
                Some(self.pi_f_prev)
            } else {
                None
            },
        }
    }

    fn eval_red(&self, xr: &DVector<f64>) -> Result<std::sync::Arc<crate::problem::CachedEval>, SearchFail> {
        Ok(self.ctx.eval(&self.ap.lift(xr))?)
    }

    /// Replaces points per the repair scheme, evaluating the replacements
    /// before committing so a budget failure leaves the set untouched.
    fn repair_with_eval(&mut self, region: &Region, target: f64) -> Result<bool, SearchFail> {
        let mut pts = self.set.points.clone();
        let log = repair_points(&mut pts, self.set.cur, region, &self.ap.lo, &self.ap.hi, target)
            .map_err(|_| SearchFail::Geometry)?;
        if log.is_empty() {
            return Ok(false);
        }
        let mut rows = Vec::with_capacity(log.len());
        for (j, p) in &log {
            let ev = self.eval_red(p)?;
            rows.push((*j, p.clone(), self.ctx.value_row(&ev)));
        }
        for (j, p, row) in rows {
            self.set.replace(j, p, row);
        }
        Ok(true)
    }

    /// (Re)fits the models, repairing geometry when the factorization
    /// reports rank deficiency.
    fn rebuild_models(&mut self) -> Result<(), SearchFail> {
        for attempt in 0..3 {
            match ModelSet::build(&self.set, self.ctx.slack, self.params().variant) {
                Ok((models, basis)) => {
                    self.models = models;
                    self.basis = basis;
                    return Ok(());
                }
                Err(_) => {
                    let radius = self.set.spread().max(self.delta()).max(1e-10);
                    let region = Region {
                        center: self.x.clone(),
                        radius: radius * (1.0 + attempt as f64),
                    };
                    let changed = self.repair_with_eval(&region, self.params().lambda_target)?;
                    if !changed {
                        return Err(SearchFail::Geometry);
                    }
                }
            }
        }
        Err(SearchFail::Geometry)
    }

    /// Rebuilds the sample set from scratch around the current iterate.
    fn build_fresh_set(&mut self, radius: f64, degree: InitDegree) -> Result<(), SearchFail> {
        let params = self.params().clone();
        let pts = initial_points(
            &self.x,
            radius.max(1e-10),
            params.init_mode,
            degree,
            &self.ap.lo,
            &self.ap.hi,
            params.lambda_target,
            &mut self.rng,
        )
        .map_err(|_| SearchFail::Geometry)?;
        let mut set = SampleSet {
            points: Vec::new(),
            values: Vec::new(),
            cur: 0,
            p_max: params.variant.p_max(self.ap.n_red()),
        };
        for p in pts {
            let ev = self.eval_red(&p)?;
            let row = self.ctx.value_row(&ev);
            set.push(p, row);
        }
        set.cur = 0;
        debug_assert_eq!(set.points[0], self.x);
        self.set = set;
        self.rebuild_models()
    }

    /// Optimality measure with a zero normal step (used at initialization
    /// and inside the criticality step).
    fn compute_pi_f0(&self) -> Result<f64, SearchFail> {
        let env = self.env();
        let jx = env.jacobian_x();
        let nred = self.ap.n_red();
        let m = self.ctx.slack.m;
        let mut g = DVector::zeros(nred + m);
        let fg = self.models.f_grad(&self.ap, self.ctx.slack, &self.x);
        for k in 0..nred {
            g[k] = fg[k];
        }
        let zero = DVector::zeros(nred + m);
        match steps::pi_f(&env, &jx, &g, &zero) {
            Ok((pi, _)) => Ok(pi),
            Err(_) => Err(SearchFail::Geometry),
        }
    }

    fn env(&self) -> StepEnv<'_> {
        StepEnv {
            ap: &self.ap,
            slack: self.ctx.slack,
            models: &self.models,
            x: &self.x,
            s: &self.s,
        }
    }

    fn run(&mut self) -> InnerDone {
        let iter_cap = 1000 * (self.ap.n_red() + 1);
        loop {
            self.k += 1;
            if self.k > iter_cap {
                return self.done(StopReason::IterationCap);
            }
            match self.subspace_minimization() {
                Ok(None) => {}
                Ok(Some(done)) => return done,
                Err(SearchFail::Budget) => return self.done(StopReason::BudgetExhausted),
                Err(SearchFail::Geometry) => return self.done(StopReason::Stalled),
            }
            match self.criticality_step() {
                Ok(None) => {}
                Ok(Some(done)) => return done,
                Err(SearchFail::Budget) => return self.done(StopReason::BudgetExhausted),
                Err(SearchFail::Geometry) => return self.done(StopReason::Stalled),
            }
            match self.iterate_once() {
                Ok(None) => {}
                Ok(Some(done)) => return done,
                Err(SearchFail::Budget) => return self.done(StopReason::BudgetExhausted),
                Err(SearchFail::Geometry) => return self.done(StopReason::Stalled),
            }
        }
    }

    /// Near-active bound detection and the subspace recursion.
    fn subspace_minimization(&mut self) -> Result<Option<InnerDone>, SearchFail> {
        let params = self.params().clone();
        let mut at_lower = Vec::new();
        let mut at_upper = Vec::new();
        for k in 0..self.ap.n_red() {
            let lo = self.ap.lo[k];
            let hi = self.ap.hi[k];
            if lo.is_finite() && self.x[k] - lo <= params.eps_b_rel * (1.0 + lo.abs()) {
                at_lower.push(k);
            } else if hi.is_finite() && hi - self.x[k] <= params.eps_b_rel * (1.0 + hi.abs()) {
                at_upper.push(k);
            }
        }
        if at_lower.is_empty() && at_upper.is_empty() {
            return Ok(None);
        }
        let sub_ap = self.ap.pin(&self.x, &at_lower, &at_upper);
        let key = sub_ap.key();
        if self.ctx.explored.borrow().contains(&key) {
            // Re-visit: shrink both radii and rebuild the geometry locally.
            let gamma1 = params.gamma1;
            self.delta_f = (gamma1 * self.delta_f).max(DELTA_FLOOR);
            self.delta_z = (gamma1 * self.delta_z).max(DELTA_FLOOR);
            let delta = self.delta();
            let degree = self.current_degree();
            self.build_fresh_set(delta, degree)?;
            self.pi_f_prev = self.compute_pi_f0()?;
            self.pi_f_seen = true;
            return Ok(None);
        }
        self.ctx.explored.borrow_mut().insert(key);

        if sub_ap.n_red() == 0 {
            // Every bound is active; the current point is the subspace
            // solution.
            if self.depth > 0 {
                return Ok(Some(self.done(StopReason::Criticality)));
            }
            let radius = self.eps_i.max(self.params().epsilon);
            self.build_fresh_set(radius, InitDegree::Linear)?;
            self.pi_f_prev = self.compute_pi_f0()?;
            self.pi_f_seen = true;
            return Ok(None);
        }

        // Recurse into the subspace from the current iterate.
        let x_full = self.ap.lift(&self.x);
        let xr_sub = sub_ap.restrict(&x_full);
        let ctx = self.ctx;
        let depth = self.depth + 1;
        let s = self.s.clone();
        let mu = self.mu.clone();
        let (df, dz, vm, dd) = (self.delta_f, self.delta_z, self.v_max, self.delta());
        let sub_done = {
            let mut sub = Search::create(
                ctx,
                sub_ap,
                depth,
                &mut self.rng,
                xr_sub,
                s,
                df,
                dz,
                vm,
                mu,
                InitDegree::Linear,
                dd,
            )?;
            sub.run()
        };
        self.v_max = self.v_max.min(sub_done.v_max);
        self.mu = sub_done.mu.clone();
        if sub_done.stop == StopReason::BudgetExhausted {
            return Ok(Some(InnerDone {
                v_max: self.v_max,
                ..sub_done
            }));
        }
        if self.depth > 0 {
            // Propagate the subspace solution upward.
            return Ok(Some(InnerDone {
                v_max: self.v_max,
                ..sub_done
            }));
        }
        // Full space: adopt the solution and verify criticality here.
        self.x = self.ap.restrict(&sub_done.x_full);
        self.s = sub_done.s;
        let ev = self.eval_red(&self.x)?;
        self.f = ev.f;
        self.z = ev.z.clone();
        let radius = self.eps_i.max(self.params().epsilon);
        self.build_fresh_set(radius, InitDegree::Linear)?;
        self.pi_f_prev = self.compute_pi_f0()?;
        self.pi_f_seen = true;
        Ok(None)
    }

    fn current_degree(&self) -> InitDegree {
        let n = self.ap.n_red();
        if self.set.len() >= crate::interp::dim_quadratic(n) {
            InitDegree::Quadratic
        } else if self.set.len() >= crate::interp::dim_diagonal(n) {
            InitDegree::Diagonal
        } else {
            InitDegree::Linear
        }
    }

    /// Scale for the criticality radius tests. The slack block is excluded:
    /// its magnitude tracks the constraint values, which would let the test
    /// fire spuriously on badly scaled problems.
    fn iterate_norm(&self) -> f64 {
        self.ap.lift(&self.x).norm().max(1.0)
    }

    fn criticality_step(&mut self) -> Result<Option<InnerDone>, SearchFail> {
        let params = self.params().clone();
        let norm_iter = self.iterate_norm();
        let delta = self.delta();
        let z_norm = self.true_residual_norm();

        if self.depth > 0 {
            if delta <= params.epsilon * norm_iter || delta <= DELTA_FLOOR {
                return Ok(Some(self.done(StopReason::Criticality)));
            }
            if z_norm <= params.epsilon && self.pi_f_prev <= params.epsilon {
                return Ok(Some(self.done(StopReason::Criticality)));
            }
            return Ok(None);
        }

        if delta <= params.epsilon * norm_iter || delta <= DELTA_FLOOR {
            return Ok(Some(self.done(StopReason::Criticality)));
        }
        if let Some(d) = self.last_d_norm {
            if d <= params.epsilon * norm_iter {
                return Ok(Some(self.done(StopReason::Criticality)));
            }
        }

        let mut modified = false;
        for _ in 0..60 {
            if !(z_norm <= self.eps_i && self.pi_f_prev <= self.eps_i) {
                break;
            }
            let eps_next = (params.alpha * z_norm)
                .max(params.alpha * self.pi_f_prev)
                .max(params.epsilon);
            let region = Region {
                center: self.x.clone(),
                radius: eps_next,
            };
            let changed = self.repair_with_eval(&region, params.lambda_target)?;
            if changed {
                self.rebuild_models()?;
                self.pi_f_prev = self.compute_pi_f0()?;
                self.pi_f_seen = true;
                modified = true;
            }
            let shrunk = eps_next < self.eps_i;
            self.eps_i = eps_next;
            if z_norm <= params.epsilon && self.pi_f_prev <= params.epsilon {
                return Ok(Some(self.done(StopReason::Criticality)));
            }
            if !changed && !shrunk {
                break;
            }
        }
        if modified {
            let reset = (params.beta * z_norm.max(self.pi_f_prev))
                .clamp(DELTA_FLOOR, params.delta_max);
            self.delta_f = reset;
            self.delta_z = reset;
            self.theta = Some(self.x.clone());
        }
        Ok(None)
    }

    /// Normal step, tangent step, trial evaluation and the mu/f/z-iteration
    /// bookkeeping.
    fn iterate_once(&mut self) -> Result<Option<InnerDone>, SearchFail> {
        let params = self.params().clone();
        let nred = self.ap.n_red();
        let m = self.ctx.slack.m;
        let dim = nred + m;
        let delta = self.delta();
        let delta_z_at_step = self.delta_z;
        let z_norm = self.true_residual_norm();
        let v_cur = self.v_current();

        // Normal step (feasibility first).
        let env = self.env();
        let jx = env.jacobian_x();
        let pi_v_val = match steps::pi_v(&env, &jx) {
            Ok(v) => v,
            Err(_) => return Err(SearchFail::Geometry),
        };
        if z_norm > params.epsilon && pi_v_val <= 1e-12 * (1.0 + v_cur) {
            return Ok(Some(self.done(StopReason::InfeasibleStationary)));
        }
        let (n_step, n_inf, n_scale_bound) = if z_norm > params.epsilon {
            let ns = steps::normal_step(&env, delta, params.kappa_n);
            let bound = ns.scale_bound.min(delta_z_at_step);
            (ns.n, ns.n_inf, bound)
        } else {
            (DVector::zeros(dim), 0.0, 0.0)
        };

        // Tangent step.
        let mut t_step = DVector::zeros(dim);
        let mut pi_f_val: Option<f64> = None;
        let mut jt_norm = 0.0;
        let mut j_norm = 0.0;
        let mut delta_ft = 0.0;
        let mut delta_fn = 0.0;
        let mut eq28 = false;
        let b = self
            .models
            .lagrangian_hessian(&self.ap, self.ctx.slack, &self.mu);
        let tangent_allowed = n_inf <= params.kappa_r * delta;
        if tangent_allowed {
            match steps::tangent_step(&env, &params, &b, &n_step, delta, z_norm) {
                Ok(out) => {
                    self.mu = out.multipliers.mu.clone();
                    pi_f_val = Some(out.pi_f);
                    self.pi_f_prev = out.pi_f;
                    self.pi_f_seen = true;
                    jt_norm = out.jt_norm;
                    j_norm = out.j_norm;
                    let g = &out.g_n - &b * &n_step;
                    delta_fn = -(g.dot(&n_step) + 0.5 * n_step.dot(&(&b * &n_step)));
                    delta_ft =
                        -(out.g_n.dot(&out.t) + 0.5 * out.t.dot(&(&b * &out.t)));
                    let delta_f_pred = delta_ft + delta_fn;
                    eq28 = delta_f_pred >= params.kappa_delta * delta_ft;
                    t_step = out.t;
                    if t_step.norm() > params.kappa_zs * n_step.norm() && !eq28 {
                        // Predicted objective gain is negligible next to the
                        // normal step's; drop the tangent component.
                        t_step = DVector::zeros(dim);
                        delta_ft = 0.0;
                        eq28 = false;
                        jt_norm = 0.0;
                    }
                }
                Err(SubsolverError::ProjectionFailure) => {
                    t_step = DVector::zeros(dim);
                }
                Err(_) => return Err(SearchFail::Geometry),
            }
        }

        let d = &n_step + &t_step;
        let t_nonzero = t_step.amax() > 0.0;
        // Clamp the trial into the boxes; a step that clamping wipes out is
        // treated as a null step.
        let mut xr_plus = DVector::from_fn(nred, |k, _| self.x[k] + d[k]);
        self.ap.clamp(&mut xr_plus);
        let mut s_plus = DVector::from_fn(m, |j, _| self.s[j] + d[nred + j]);
        self.ctx.slack.clamp_s(&mut s_plus);
        let d_nonzero = xr_plus != self.x || s_plus != self.s;

        // Null iteration: only multipliers changed; check the geometry.
        if !d_nonzero {
            let mut y_changed = false;
            let spread = self.set.spread();
            if spread > 0.0 {
                let region_all = Region {
                    center: self.x.clone(),
                    radius: spread,
                };
                let (lambda_est, _) = lambda_from_basis(
                    &self.basis,
                    self.set.len(),
                    &region_all,
                    &self.ap.lo,
                    &self.ap.hi,
                );
                if lambda_est * spread > params.eps_mu {
                    let region = Region {
                        center: self.x.clone(),
                        radius: params.xi_far * spread,
                    };
                    y_changed = self.repair_with_eval(&region, params.lambda_target)?;
                    if y_changed {
                        self.rebuild_models()?;
                    }
                }
            }
            if y_changed {
                self.mu_streak = 0;
                self.last_d_norm = None;
            } else {
                self.mu_streak += 1;
                self.last_d_norm = Some(0.0);
            }
            self.trace_record("mu", delta, v_cur, pi_f_val, Some(pi_v_val), false, 0.0, n_inf, n_scale_bound, 0.0, 0.0, 0.0);
            if self.mu_streak >= params.mu_stall_cap {
                return Ok(Some(self.done(StopReason::Stalled)));
            }
            return Ok(None);
        }
        self.mu_streak = 0;

        let ev_plus = match self.eval_red(&xr_plus) {
            Ok(e) => e,
            Err(SearchFail::Budget) => return Ok(Some(self.done(StopReason::BudgetExhausted))),
            Err(e) => return Err(e),
        };
        let f_plus = ev_plus.f;
        let z_plus = ev_plus.z.clone();
        let v_plus = slack_violation(&z_plus, &s_plus);
        let row_plus = self.ctx.value_row(&ev_plus);

        // Actual displacement after clamping.
        let mut d_act = DVector::zeros(dim);
        for k in 0..nred {
            d_act[k] = xr_plus[k] - self.x[k];
        }
        for j in 0..m {
            d_act[nred + j] = s_plus[j] - self.s[j];
        }
        let d_inf = d_act.amax();
        let d_norm2 = d_act.norm();
        self.last_d_norm = Some(d_norm2);

        let at_marker = self.theta.as_ref() == Some(&self.x);
        let is_f_iter = t_nonzero && eq28 && v_plus <= self.v_max;

        if is_f_iter {
            let delta_f_pred = delta_ft + delta_fn;
            let rho_f = if delta_f_pred > 0.0 {
                (self.f - f_plus) / delta_f_pred
            } else {
                f64::NEG_INFINITY
            };
            let accepted = rho_f >= params.eta1;
            let outcome = update_interpolation_set(
                &mut self.set,
                &self.basis,
                &xr_plus,
                row_plus,
                delta,
                self.eps_i,
                accepted,
                at_marker,
                params.zeta,
                params.lambda_target,
            );
            let y_changed = outcome.changed();
            let moved;
            if accepted {
                self.adopt_iterate(&xr_plus, &s_plus, f_plus, &z_plus);
                moved = true;
                self.nu_f = 0;
                if rho_f >= params.eta2 {
                    self.delta_f =
                        super::grown_radius(params.gamma2, d_norm2, self.delta_f, params.delta_max);
                }
                if v_plus < params.eta3 * self.v_max {
                    // At (near-)feasible iterates the normal component is
                    // null and the printed growth factor would freeze the
                    // slack radius, capping every later composite step; let
                    // it track the accepted step instead.
                    let step = n_step.norm().max(d_norm2);
                    self.delta_z =
                        super::grown_radius(params.gamma2, step, self.delta_z, params.delta_max);
                }
            } else {
                if !y_changed || self.nu_f <= self.nu_cap {
                    self.delta_f = (params.gamma1 * d_norm2).clamp(DELTA_FLOOR, params.delta_max);
                }
                if y_changed && self.nu_f <= self.nu_cap {
                    self.nu_f += 1;
                }
                // Second-order correction against the Maratos effect.
                let corrected = self.try_second_order_correction(
                    &xr_plus,
                    &s_plus,
                    &z_plus,
                    delta_z_at_step,
                    delta_f_pred,
                    delta,
                    at_marker,
                )?;
                if let Some(done) = corrected.1 {
                    return Ok(Some(done));
                }
                moved = corrected.0;
            }
            if y_changed || moved {
                self.rebuild_models()?;
            }
            self.trace_record(
                "f",
                delta,
                self.v_current(),
                pi_f_val,
                Some(pi_v_val),
                moved,
                d_inf,
                n_inf,
                n_scale_bound,
                jt_norm,
                j_norm,
                t_step.norm(),
            );
            return Ok(None);
        }

        // z-iteration: feasibility is in charge.
        let full_j = {
            let env = self.env();
            env.jacobian_xs(&jx)
        };
        let r_true = &self.z - &self.s;
        let jd = &full_j * &d_act;
        let jn = &full_j * &n_step;
        let delta_zd = 0.5 * r_true.norm_squared() - 0.5 * (&r_true + &jd).norm_squared();
        let delta_zn = 0.5 * r_true.norm_squared() - 0.5 * (&r_true + &jn).norm_squared();
        let rho_z = if delta_zd > 0.0 {
            (v_cur - v_plus) / delta_zd
        } else {
            f64::NEG_INFINITY
        };
        let accepted = n_inf > 0.0 && delta_zd >= params.kappa_zn * delta_zn && rho_z >= params.eta1;
        let outcome = update_interpolation_set(
            &mut self.set,
            &self.basis,
            &xr_plus,
            row_plus,
            delta,
            self.eps_i,
            accepted,
            at_marker,
            params.zeta,
            params.lambda_target,
        );
        let y_changed = outcome.changed();
        if accepted {
            self.adopt_iterate(&xr_plus, &s_plus, f_plus, &z_plus);
            self.nu_z = 0;
            if rho_z >= params.eta2 {
                self.delta_z = super::grown_radius(
                    params.gamma2,
                    n_step.norm(),
                    self.delta_z,
                    params.delta_max,
                );
            }
            // Funnel tightening.
            self.v_max = super::tightened_funnel_bound(
                self.v_max,
                v_cur,
                v_plus,
                params.kappa_tx1,
                params.kappa_tx2,
            );
            if !tangent_allowed {
                // Pure restoration: let the composite radius track the
                // feasibility radius, otherwise the frozen optimality radius
                // caps every normal step at its initial value.
                self.delta_f = self.delta_f.max(self.delta_z);
            }
        } else {
            if n_inf == 0.0 {
                self.delta_z = (params.gamma1 * self.delta_z).max(DELTA_FLOOR);
            } else if !y_changed || self.nu_z <= self.nu_cap {
                self.delta_z =
                    (params.gamma1 * n_step.norm()).clamp(DELTA_FLOOR, params.delta_max);
            }
            if y_changed && self.nu_z <= self.nu_cap {
                self.nu_z += 1;
            }
        }
        if y_changed || accepted {
            self.rebuild_models()?;
        }
        self.trace_record(
            "z",
            delta,
            self.v_current(),
            pi_f_val,
            Some(pi_v_val),
            accepted,
            d_inf,
            n_inf,
            n_scale_bound,
            jt_norm,
            j_norm,
            t_step.norm(),
        );
        Ok(None)
    }

    /// One second-order correction attempt after a rejected f-iteration.
    /// Returns (moved, Some(done)) when the budget ran out mid-attempt.
    #[allow(clippy::too_many_arguments)]
    fn try_second_order_correction(
        &mut self,
        x_plus: &DVector<f64>,
        s_plus: &DVector<f64>,
        z_plus: &DVector<f64>,
        delta_z: f64,
        delta_f_pred: f64,
        delta: f64,
        at_marker: bool,
    ) -> Result<(bool, Option<InnerDone>), SearchFail> {
        let params = self.params().clone();
        let nred = self.ap.n_red();
        let m = self.ctx.slack.m;
        let nhat = {
            let env = self.env();
            steps::second_order_correction(&env, x_plus, s_plus, z_plus, delta_z, params.kappa_n)
        };
        if nhat.amax() <= 1e-14 {
            return Ok((false, None));
        }
        let mut xc = DVector::from_fn(nred, |k, _| x_plus[k] + nhat[k]);
        self.ap.clamp(&mut xc);
        let mut sc = DVector::from_fn(m, |j, _| s_plus[j] + nhat[nred + j]);
        self.ctx.slack.clamp_s(&mut sc);
        let ev = match self.eval_red(&xc) {
            Ok(e) => e,
            Err(SearchFail::Budget) => {
                return Ok((false, Some(self.done(StopReason::BudgetExhausted))))
            }
            Err(e) => return Err(e),
        };
        let v_c = slack_violation(&ev.z, &sc);
        let rho_c = if delta_f_pred > 0.0 {
            (self.f - ev.f) / delta_f_pred
        } else {
            f64::NEG_INFINITY
        };
        if rho_c >= params.eta1 && v_c <= self.v_max {
            // Insert the corrected point as a successful trial.
            let interp =
                crate::interp::Interpolator::new(&self.set.points, self.set.cur, params.variant)
                    .map_err(|_| SearchFail::Geometry)?;
            let basis = interp.lagrange().map_err(|_| SearchFail::Geometry)?;
            let row = self.ctx.value_row(&ev);
            update_interpolation_set(
                &mut self.set,
                &basis,
                &xc,
                row,
                delta,
                self.eps_i,
                true,
                at_marker,
                params.zeta,
                params.lambda_target,
            );
            let zc = ev.z.clone();
            self.adopt_iterate(&xc, &sc, ev.f, &zc);
            self.nu_f = 0;
            return Ok((true, None));
        }
        Ok((false, None))
    }

    fn adopt_iterate(&mut self, xr: &DVector<f64>, s: &DVector<f64>, f: f64, z: &DVector<f64>) {
        self.x = xr.clone();
        self.s = s.clone();
        self.f = f;
        self.z = z.clone();
        let idx = self
            .set
            .position_of(xr)
            .expect("accepted iterate is in the sample set");
        self.set.cur = idx;
    }

    #[allow(clippy::too_many_arguments)]
    fn trace_record(
        &self,
        iter_type: &'static str,
        delta: f64,
        v: f64,
        pi_f: Option<f64>,
        pi_v: Option<f64>,
        accepted: bool,
        d_inf: f64,
        n_inf: f64,
        n_scale_bound: f64,
        jt_norm: f64,
        j_norm: f64,
        t_norm: f64,
    ) {
        if !self.ctx.params.trace {
            return;
        }
        if std::env::var("FUNNEL_DEBUG_ITER").is_ok() {
            eprintln!("    k={} type={} x={:?} f={:.6}", self.k, iter_type, self.ap.lift(&self.x).as_slice(), self.f);
        }
        let xf = self.ap.lift(&self.x);
        let in_box = self.ctx.slack.in_x_box(xf.as_slice())
            && (0..self.ctx.slack.m).all(|j| {
                self.s[j] >= self.ctx.slack.l_s[j] && self.s[j] <= self.ctx.slack.u_s[j]
            });
        self.ctx.record(IterationRecord {
            k: self.k,
            depth: self.depth,
            iter_type,
            delta_f: self.delta_f,
            delta_z: self.delta_z,
            delta,
            v,
            v_max: self.v_max,
            pi_f,
            pi_v,
            y_size: self.set.len(),
            bb_calls: self.ctx.ledger.bb_calls(),
            accepted,
            d_inf,
            n_inf,
            n_scale_bound,
            jt_norm,
            j_norm,
            t_norm,
            iterate_in_box: in_box,
        });
    }
}

fn placeholder_basis() -> LagrangeBasis {
    // Replaced before first use; a 1-point basis keeps the type total.
    let pts = vec![DVector::from_vec(vec![0.0]), DVector::from_vec(vec![1.0])];
    crate::interp::Interpolator::new(&pts, 0, crate::interp::ModelVariant::MinL2)
        .unwrap()
        .lagrange()
        .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{FnKind, GreyBoxProblem, ScalarFn, VectorFn};
    use std::sync::Arc;

    fn run(
        slack: &SlackProblem,
        budget: usize,
        x0: &[f64],
        params: &FunnelParams,
    ) -> (LocalSearchOutcome, usize) {
        let ledger = EvaluationLedger::new(budget);
        let out = local_search(
            slack,
            &ledger,
            params,
            &DVector::from_column_slice(x0),
            budget,
            42,
        );
        let calls = ledger.bb_calls();
        (out, calls)
    }

    #[test]
    fn constant_objective_is_critical_at_start() {
        let f: ScalarFn = Arc::new(|_| 7.0);
        let prob = GreyBoxProblem::builder(2, FnKind::BlackBox, f)
            .x_bounds(&[-1.0, -1.0], &[1.0, 1.0])
            .build()
            .unwrap();
        let slack = SlackProblem::new(prob).unwrap();
        let (out, _) = run(&slack, 50, &[0.1, -0.2], &FunnelParams::default());
        assert!(out.converged);
        assert_eq!(out.x, DVector::from_vec(vec![0.1, -0.2]));
        assert_eq!(out.f, 7.0);
        assert_eq!(out.cv, 0.0);
    }

    #[test]
    fn unconstrained_quadratic_converges() {
        let f: ScalarFn = Arc::new(|x: &[f64]| (x[0] - 0.3).powi(2) + (x[1] + 0.2).powi(2));
        let prob = GreyBoxProblem::builder(2, FnKind::BlackBox, f)
            .x_bounds(&[-1.0, -1.0], &[1.0, 1.0])
            .build()
            .unwrap();
        let slack = SlackProblem::new(prob).unwrap();
        let (out, _) = run(&slack, 120, &[-0.8, 0.9], &FunnelParams::default());
        assert!(out.cv <= 1e-12);
        assert!(
            (out.x[0] - 0.3).abs() < 1e-3 && (out.x[1] + 0.2).abs() < 1e-3,
            "ended at {:?} (stop {:?})",
            out.x.as_slice(),
            out.stop
        );
    }

    #[test]
    fn linear_objective_with_linear_constraint_reaches_kkt() {
        // min x1 + x2 s.t. x1 + x2 >= 1 on [0,2]^2; optimum value 1.
        let f: ScalarFn = Arc::new(|x: &[f64]| x[0] + x[1]);
        let c: VectorFn = Arc::new(|x: &[f64]| vec![x[0] + x[1]]);
        let prob = GreyBoxProblem::builder(2, FnKind::BlackBox, f)
            .black_constraints(1, c, &[1.0], &[f64::INFINITY])
            .x_bounds(&[0.0, 0.0], &[2.0, 2.0])
            .build()
            .unwrap();
        let slack = SlackProblem::new(prob).unwrap();
        let (out, calls) = run(&slack, 50, &[1.5, 1.5], &FunnelParams::default());
        assert!(out.cv <= 1e-4, "cv = {} (stop {:?})", out.cv, out.stop);
        assert!((out.f - 1.0).abs() <= 1e-3, "f = {}", out.f);
        assert!(calls <= 50);
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        let f: ScalarFn = Arc::new(|x: &[f64]| x[0].sin() * x[1].cos() + x[0] * x[0]);
        let prob = GreyBoxProblem::builder(2, FnKind::BlackBox, f)
            .x_bounds(&[-5.0, -5.0], &[5.0, 5.0])
            .build()
            .unwrap();
        let slack = SlackProblem::new(prob).unwrap();
        let (out, calls) = run(&slack, 4, &[3.0, 3.0], &FunnelParams::default());
        assert!(calls <= 4);
        assert!(!out.converged || calls < 4);
    }

    #[test]
    fn equality_constrained_problem_converges() {
        // min x1^2 + (x2-1)^2 s.t. x2 - x1^2 = 0 on [-1,1]^2.
        let f: ScalarFn = Arc::new(|x: &[f64]| x[0] * x[0] + (x[1] - 1.0).powi(2));
        let c: VectorFn = Arc::new(|x: &[f64]| vec![x[1] - x[0] * x[0]]);
        let prob = GreyBoxProblem::builder(2, FnKind::BlackBox, f)
            .black_constraints(1, c, &[0.0], &[0.0])
            .x_bounds(&[-1.0, -1.0], &[1.0, 1.0])
            .build()
            .unwrap();
        let slack = SlackProblem::new(prob).unwrap();
        let (out, _) = run(&slack, 200, &[0.9, 0.4], &FunnelParams::default());
        assert!(out.cv <= 1e-4, "cv = {}", out.cv);
        assert!(out.f <= 0.7505, "f = {} at {:?}", out.f, out.x.as_slice());
    }

    #[test]
    fn funnel_trace_invariants_hold() {
        let f: ScalarFn = Arc::new(|x: &[f64]| x[0] + x[1]);
        let c: VectorFn = Arc::new(|x: &[f64]| vec![x[0] * x[0] + x[1] * x[1]]);
        let prob = GreyBoxProblem::builder(2, FnKind::BlackBox, f)
            .black_constraints(1, c, &[1.0], &[4.0])
            .x_bounds(&[-3.0, -3.0], &[3.0, 3.0])
            .build()
            .unwrap();
        let slack = SlackProblem::new(prob).unwrap();
        let params = FunnelParams {
            trace: true,
            ..FunnelParams::default()
        };
        let (out, _) = run(&slack, 150, &[2.5, -2.5], &params);
        assert!(!out.trace.is_empty());
        let mut prev_vmax = f64::INFINITY;
        for rec in &out.trace {
            assert!(rec.v_max <= prev_vmax + 1e-12);
            prev_vmax = rec.v_max;
            if rec.accepted {
                assert!(rec.v <= rec.v_max + 1e-12);
            }
            assert!(rec.d_inf <= rec.delta + 1e-12);
            assert!(rec.delta_f <= params.delta_max && rec.delta_z <= params.delta_max);
            assert!(rec.iterate_in_box);
            if rec.n_inf > 0.0 {
                assert!(rec.n_inf <= rec.n_scale_bound + 1e-12);
            }
            if rec.t_norm > 0.0 {
                assert!(rec.jt_norm <= 1e-6 * (1.0 + rec.j_norm * rec.t_norm));
            }
        }
    }
}
