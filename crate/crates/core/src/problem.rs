//! Grey-box problem definitions, the slack-variable reformulation, evaluation
//! accounting and the l1 merit function.
//!
//! A grey-box problem mixes black-box functions (available only through
//! evaluations) with white-box functions (closed form, derivatives supplied by
//! the caller). The solver never requests an evaluation outside the `x` box:
//! those bounds are unrelaxable.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Everything larger than this is treated as unbounded when sanitizing
/// black-box outputs; non-finite values are clamped to it.
const VALUE_CAP: f64 = 1e30;

/// Feasibility filter used for reporting: a point counts as feasible when its
/// constraint-range violation does not exceed this.
pub const FEASIBILITY_TOL: f64 = 1e-4;

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type JacobianFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;
pub type GradientFn = Arc<dyn Fn(&[f64]) -> DVector<f64> + Send + Sync>;

/// Whether the objective is available only through evaluations or in closed
/// form with a gradient.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FnKind {
    BlackBox,
    WhiteBox,
}

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("dimension must be at least 1")]
    EmptyDimension,
    #[error("lower bound exceeds upper bound at component {0}")]
    InvertedBound(usize),
    #[error("white-box objective requires a gradient")]
    MissingGradient,
    #[error("white-box constraints require a Jacobian")]
    MissingJacobian,
    #[error("bound vector has wrong length (expected {expected}, got {got})")]
    BadBoundLength { expected: usize, got: usize },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("black-box evaluation budget exhausted")]
    BudgetExhausted,
    #[error("evaluation requested outside the x box")]
    DomainViolation,
}

/// A constrained problem with black-box constraints `c`, white-box constraints
/// `h` and range bounds on both, plus an unrelaxable box on `x`.
#[derive(Clone)]
pub struct GreyBoxProblem {
    pub n: usize,
    pub f_kind: FnKind,
    pub f: ScalarFn,
    pub f_grad: Option<GradientFn>,
    /// Number of black-box constraints.
    pub q: usize,
    pub c: Option<VectorFn>,
    pub l_c: DVector<f64>,
    pub u_c: DVector<f64>,
    /// Number of white-box constraints.
    pub l: usize,
    pub h: Option<VectorFn>,
    pub h_jac: Option<JacobianFn>,
    pub l_h: DVector<f64>,
    pub u_h: DVector<f64>,
    pub l_x: DVector<f64>,
    pub u_x: DVector<f64>,
}

impl GreyBoxProblem {
    /// Starts a builder for a problem with `n` variables and the given
    /// objective.
    pub fn builder(n: usize, f_kind: FnKind, f: ScalarFn) -> GreyBoxProblemBuilder {
        GreyBoxProblemBuilder {
            n,
            f_kind,
            f,
            f_grad: None,
            q: 0,
            c: None,
            l_c: Vec::new(),
            u_c: Vec::new(),
            l: 0,
            h: None,
            h_jac: None,
            l_h: Vec::new(),
            u_h: Vec::new(),
            l_x: vec![f64::NEG_INFINITY; n],
            u_x: vec![f64::INFINITY; n],
        }
    }

    pub fn validate(&self) -> Result<(), ProblemError> {
        if self.n == 0 {
            return Err(ProblemError::EmptyDimension);
        }
        if self.f_kind == FnKind::WhiteBox && self.f_grad.is_none() {
            return Err(ProblemError::MissingGradient);
        }
        if self.l > 0 && self.h_jac.is_none() {
            return Err(ProblemError::MissingJacobian);
        }
        for (name, lo, hi, len) in [
            ("c", &self.l_c, &self.u_c, self.q),
            ("h", &self.l_h, &self.u_h, self.l),
            ("x", &self.l_x, &self.u_x, self.n),
        ] {
            let _ = name;
            if lo.len() != len || hi.len() != len {
                return Err(ProblemError::BadBoundLength {
                    expected: len,
                    got: lo.len(),
                });
            }
            for i in 0..len {
                if lo[i].is_finite() && hi[i].is_finite() && lo[i] > hi[i] {
                    return Err(ProblemError::InvertedBound(i));
                }
            }
        }
        Ok(())
    }
}

pub struct GreyBoxProblemBuilder {
    n: usize,
    f_kind: FnKind,
    f: ScalarFn,
    f_grad: Option<GradientFn>,
    q: usize,
    c: Option<VectorFn>,
    l_c: Vec<f64>,
    u_c: Vec<f64>,
    l: usize,
    h: Option<VectorFn>,
    h_jac: Option<JacobianFn>,
    l_h: Vec<f64>,
    u_h: Vec<f64>,
    l_x: Vec<f64>,
    u_x: Vec<f64>,
}

impl GreyBoxProblemBuilder {
    pub fn f_grad(mut self, g: GradientFn) -> Self {
        self.f_grad = Some(g);
        self
    }

    pub fn black_constraints(mut self, q: usize, c: VectorFn, lo: &[f64], hi: &[f64]) -> Self {
        self.q = q;
        self.c = Some(c);
        self.l_c = lo.to_vec();
        self.u_c = hi.to_vec();
        self
    }

    pub fn white_constraints(
        mut self,
        l: usize,
        h: VectorFn,
        jac: JacobianFn,
        lo: &[f64],
        hi: &[f64],
    ) -> Self {
        self.l = l;
        self.h = Some(h);
        self.h_jac = Some(jac);
        self.l_h = lo.to_vec();
        self.u_h = hi.to_vec();
        self
    }

    pub fn x_bounds(mut self, lo: &[f64], hi: &[f64]) -> Self {
        self.l_x = lo.to_vec();
        self.u_x = hi.to_vec();
        self
    }

    pub fn build(self) -> Result<GreyBoxProblem, ProblemError> {
        let prob = GreyBoxProblem {
            n: self.n,
            f_kind: self.f_kind,
            f: self.f,
            f_grad: self.f_grad,
            q: self.q,
            c: self.c,
            l_c: DVector::from_vec(self.l_c),
            u_c: DVector::from_vec(self.u_c),
            l: self.l,
            h: self.h,
            h_jac: self.h_jac,
            l_h: DVector::from_vec(self.l_h),
            u_h: DVector::from_vec(self.u_h),
            l_x: DVector::from_vec(self.l_x),
            u_x: DVector::from_vec(self.u_x),
        };
        prob.validate()?;
        Ok(prob)
    }
}

/// The slack reformulation: range constraints `l <= z(x) <= u` become
/// `z(x) - s = 0` with `s` boxed by the concatenated constraint bounds.
/// The rewriting is internal; callers only ever provide the original data.
#[derive(Clone)]
pub struct SlackProblem {
    pub parent: Arc<GreyBoxProblem>,
    /// Total constraint count `q + l`.
    pub m: usize,
    pub l_s: DVector<f64>,
    pub u_s: DVector<f64>,
}

impl SlackProblem {
    pub fn new(parent: GreyBoxProblem) -> Result<Self, ProblemError> {
        parent.validate()?;
        let m = parent.q + parent.l;
        let mut l_s = DVector::zeros(m);
        let mut u_s = DVector::zeros(m);
        for j in 0..parent.q {
            l_s[j] = parent.l_c[j];
            u_s[j] = parent.u_c[j];
        }
        for j in 0..parent.l {
            l_s[parent.q + j] = parent.l_h[j];
            u_s[parent.q + j] = parent.u_h[j];
        }
        Ok(SlackProblem {
            parent: Arc::new(parent),
            m,
            l_s,
            u_s,
        })
    }

    pub fn n(&self) -> usize {
        self.parent.n
    }

    /// True when a fresh point costs a black-box call: either the objective is
    /// a black box or there is at least one black-box constraint (both are
    /// co-evaluated in a single call).
    pub fn charges_bb(&self) -> bool {
        self.parent.q > 0 || self.parent.f_kind == FnKind::BlackBox
    }

    pub fn in_x_box(&self, x: &[f64]) -> bool {
        x.iter()
            .enumerate()
            .all(|(i, &v)| v >= self.parent.l_x[i] && v <= self.parent.u_x[i])
    }

    pub fn clamp_x(&self, x: &mut DVector<f64>) {
        for i in 0..x.len() {
            x[i] = x[i].clamp(self.parent.l_x[i], self.parent.u_x[i]);
        }
    }

    /// Componentwise constraint-range violation
    /// `max[[z-u]^+, [l-z]^+]` (a scalar max over all components).
    pub fn constraint_violation(&self, z: &DVector<f64>) -> f64 {
        let mut cv: f64 = 0.0;
        for j in 0..self.m {
            if self.u_s[j].is_finite() {
                cv = cv.max(z[j] - self.u_s[j]);
            }
            if self.l_s[j].is_finite() {
                cv = cv.max(self.l_s[j] - z[j]);
            }
        }
        cv.max(0.0)
    }

    /// l1 penalty merit `f + pi * sum([z-u]^+ + [l-z]^+)`, used only for
    /// ranking multistart candidates.
    pub fn merit_phi(&self, f: f64, z: &DVector<f64>, pi: f64) -> f64 {
        debug_assert!(pi > 0.0);
        let mut viol = 0.0;
        for j in 0..self.m {
            if self.u_s[j].is_finite() {
                viol += (z[j] - self.u_s[j]).max(0.0);
            }
            if self.l_s[j].is_finite() {
                viol += (self.l_s[j] - z[j]).max(0.0);
            }
        }
        f + pi * viol
    }

    /// Slack initialization: the projection of `z(x)` onto the slack box,
    /// which minimizes `v = 1/2 ||z(x) - s||^2` over the box.
    pub fn initial_slack(&self, z: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.m, |j, _| z[j].clamp(self.l_s[j], self.u_s[j]))
    }

    pub fn clamp_s(&self, s: &mut DVector<f64>) {
        for j in 0..self.m {
            s[j] = s[j].clamp(self.l_s[j], self.u_s[j]);
        }
    }
}

/// Violation `v(x, s) = 1/2 ||z - s||^2` of the reformulated equality.
pub fn slack_violation(z: &DVector<f64>, s: &DVector<f64>) -> f64 {
    0.5 * (z - s).norm_squared()
}

/// A cached evaluation: objective and all constraint values at one point.
#[derive(Clone, Debug)]
pub struct CachedEval {
    pub f: f64,
    pub z: DVector<f64>,
}

/// A point (x, s) of the reformulated problem with its cached true values.
#[derive(Clone, Debug)]
pub struct SlackIterate {
    pub x: DVector<f64>,
    pub s: DVector<f64>,
    pub f: f64,
    pub z: DVector<f64>,
    pub v: f64,
}

impl SlackIterate {
    pub fn new(x: DVector<f64>, s: DVector<f64>, eval: &CachedEval) -> Self {
        let v = slack_violation(&eval.z, &s);
        SlackIterate {
            x,
            s,
            f: eval.f,
            z: eval.z.clone(),
            v,
        }
    }
}

#[derive(Clone, Debug)]
struct TrackedPoint {
    x: DVector<f64>,
    f: f64,
    cv: f64,
}

struct LedgerInner {
    bb_calls: usize,
    cache: HashMap<Vec<u64>, Arc<CachedEval>>,
    best_feasible: Option<TrackedPoint>,
    least_infeasible: Option<TrackedPoint>,
}

/// Black-box call accounting. One call covers the objective (when it is a
/// black box) and all black-box constraints at one new point; white-box
/// evaluations are never counted; hits on previously evaluated points are
/// free. The cache is keyed by exact point coordinates since interpolation
/// reuses points bitwise.
pub struct EvaluationLedger {
    budget: usize,
    inner: Mutex<LedgerInner>,
}

impl EvaluationLedger {
    pub fn new(budget: usize) -> Self {
        EvaluationLedger {
            budget,
            inner: Mutex::new(LedgerInner {
                bb_calls: 0,
                cache: HashMap::new(),
                best_feasible: None,
                least_infeasible: None,
            }),
        }
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn bb_calls(&self) -> usize {
        self.inner.lock().unwrap().bb_calls
    }

    pub fn remaining(&self) -> usize {
        self.budget.saturating_sub(self.bb_calls())
    }

    /// Best evaluated point with `cv <= FEASIBILITY_TOL`, as `(x, f, cv)`.
    pub fn best_feasible(&self) -> Option<(DVector<f64>, f64, f64)> {
        let inner = self.inner.lock().unwrap();
        inner
            .best_feasible
            .as_ref()
            .map(|p| (p.x.clone(), p.f, p.cv))
    }

    /// Evaluated point with the smallest violation, used when nothing
    /// feasible was ever seen.
    pub fn least_infeasible(&self) -> Option<(DVector<f64>, f64, f64)> {
        let inner = self.inner.lock().unwrap();
        inner
            .least_infeasible
            .as_ref()
            .map(|p| (p.x.clone(), p.f, p.cv))
    }

    pub fn is_cached(&self, x: &DVector<f64>) -> bool {
        let key: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
        self.inner.lock().unwrap().cache.contains_key(&key)
    }

    /// Evaluates `z(x) = (c(x), h(x))` together with the objective, charging
    /// one black-box call iff the point is new and the problem has any black
    /// box. Returns the cached values on repeats.
    pub fn evaluate(
        &self,
        prob: &SlackProblem,
        x: &DVector<f64>,
    ) -> Result<Arc<CachedEval>, EvalError> {
        if !prob.in_x_box(x.as_slice()) {
            return Err(EvalError::DomainViolation);
        }
        let key: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
        let mut inner = self.inner.lock().unwrap();
        if let Some(hit) = inner.cache.get(&key) {
            return Ok(hit.clone());
        }
        if prob.charges_bb() && inner.bb_calls >= self.budget {
            return Err(EvalError::BudgetExhausted);
        }

        let parent = &prob.parent;
        let xs = x.as_slice();
        let mut z = DVector::zeros(prob.m);
        if parent.q > 0 {
            let cv = (parent.c.as_ref().expect("q > 0 requires c"))(xs);
            for j in 0..parent.q {
                z[j] = sanitize(cv[j]);
            }
        }
        if parent.l > 0 {
            let hv = (parent.h.as_ref().expect("l > 0 requires h"))(xs);
            for j in 0..parent.l {
                z[parent.q + j] = sanitize(hv[j]);
            }
        }
        let f = sanitize((parent.f)(xs));

        if prob.charges_bb() {
            inner.bb_calls += 1;
        }
        let cv = prob.constraint_violation(&z);
        let tracked = TrackedPoint {
            x: x.clone(),
            f,
            cv,
        };
        if cv <= FEASIBILITY_TOL {
            let better = inner.best_feasible.as_ref().is_none_or(|b| f < b.f);
            if better {
                inner.best_feasible = Some(tracked.clone());
            }
        }
        let better = inner
            .least_infeasible
            .as_ref()
            .is_none_or(|b| (cv, f) < (b.cv, b.f));
        if better {
            inner.least_infeasible = Some(tracked);
        }

        let entry = Arc::new(CachedEval { f, z });
        inner.cache.insert(key, entry.clone());
        Ok(entry)
    }
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        VALUE_CAP
    } else {
        v.clamp(-VALUE_CAP, VALUE_CAP)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pure_white() -> SlackProblem {
        let f: ScalarFn = Arc::new(|x: &[f64]| x[0] * x[0]);
        let grad: GradientFn = Arc::new(|x: &[f64]| DVector::from_vec(vec![2.0 * x[0], 0.0]));
        let h: VectorFn = Arc::new(|x: &[f64]| vec![x[0] + x[1]]);
        let jac: JacobianFn = Arc::new(|_: &[f64]| DMatrix::from_row_slice(1, 2, &[1.0, 1.0]));
        let prob = GreyBoxProblem::builder(2, FnKind::WhiteBox, f)
            .f_grad(grad)
            .white_constraints(1, h, jac, &[0.0], &[10.0])
            .x_bounds(&[-5.0, -5.0], &[5.0, 5.0])
            .build()
            .unwrap();
        SlackProblem::new(prob).unwrap()
    }

    fn one_black() -> SlackProblem {
        let f: ScalarFn = Arc::new(|x: &[f64]| x[0]);
        let c: VectorFn = Arc::new(|x: &[f64]| vec![x[0] * x[0]]);
        let prob = GreyBoxProblem::builder(1, FnKind::BlackBox, f)
            .black_constraints(1, c, &[0.0], &[100.0])
            .x_bounds(&[-10.0], &[10.0])
            .build()
            .unwrap();
        SlackProblem::new(prob).unwrap()
    }

    #[test]
    fn pure_white_box_never_charges() {
        let prob = pure_white();
        let ledger = EvaluationLedger::new(0);
        let x = DVector::from_vec(vec![1.0, 2.0]);
        let eval = ledger.evaluate(&prob, &x).unwrap();
        assert_eq!(eval.z[0], 3.0);
        assert_eq!(ledger.bb_calls(), 0);
    }

    #[test]
    fn cache_hit_is_free_and_identical() {
        let prob = one_black();
        let ledger = EvaluationLedger::new(5);
        let x = DVector::from_vec(vec![3.0]);
        let first = ledger.evaluate(&prob, &x).unwrap();
        assert_eq!(first.z[0], 9.0);
        assert_eq!(ledger.bb_calls(), 1);
        let again = ledger.evaluate(&prob, &x).unwrap();
        assert_eq!(again.z[0], 9.0);
        assert_eq!(ledger.bb_calls(), 1);
    }

    #[test]
    fn budget_exhaustion_on_second_point() {
        let prob = one_black();
        let ledger = EvaluationLedger::new(1);
        let x = DVector::from_vec(vec![3.0]);
        let eval = ledger.evaluate(&prob, &x).unwrap();
        assert_eq!(eval.z[0], 9.0);
        assert_eq!(ledger.bb_calls(), 1);
        let y = DVector::from_vec(vec![4.0]);
        assert_eq!(
            ledger.evaluate(&prob, &y).unwrap_err(),
            EvalError::BudgetExhausted
        );
        // The cached point is still free.
        assert!(ledger.evaluate(&prob, &x).is_ok());
    }

    #[test]
    fn domain_violation_outside_box() {
        let prob = one_black();
        let ledger = EvaluationLedger::new(10);
        let x = DVector::from_vec(vec![11.0]);
        assert_eq!(
            ledger.evaluate(&prob, &x).unwrap_err(),
            EvalError::DomainViolation
        );
    }

    #[test]
    fn constraint_violation_cases() {
        let prob = one_black(); // z in [0, 100]
        assert_eq!(prob.constraint_violation(&DVector::from_vec(vec![50.0])), 0.0);
        assert_eq!(prob.constraint_violation(&DVector::from_vec(vec![101.0])), 1.0);
        assert_eq!(prob.constraint_violation(&DVector::from_vec(vec![-2.5])), 2.5);
    }

    #[test]
    fn violation_componentwise_max() {
        // z = (-0.5, 3), box [0,1]^2 -> max(0.5, 2) = 2
        let f: ScalarFn = Arc::new(|_| 0.0);
        let c: VectorFn = Arc::new(|_| vec![0.0, 0.0]);
        let prob = GreyBoxProblem::builder(1, FnKind::BlackBox, f)
            .black_constraints(2, c, &[0.0, 0.0], &[1.0, 1.0])
            .x_bounds(&[0.0], &[1.0])
            .build()
            .unwrap();
        let slack = SlackProblem::new(prob).unwrap();
        let z = DVector::from_vec(vec![-0.5, 3.0]);
        assert_eq!(slack.constraint_violation(&z), 2.0);
    }

    #[test]
    fn merit_adds_scaled_violation() {
        let prob = one_black(); // z in [0, 100]
        let z_feas = DVector::from_vec(vec![50.0]);
        assert_eq!(prob.merit_phi(4.0, &z_feas, 10.0), 4.0);
        let z_viol = DVector::from_vec(vec![101.0]);
        assert_eq!(prob.merit_phi(4.0, &z_viol, 10.0), 14.0);
        assert!(prob.merit_phi(4.0, &z_viol, 20.0) > prob.merit_phi(4.0, &z_viol, 10.0));
    }

    #[test]
    fn initial_slack_projects_and_minimizes_v() {
        let f: ScalarFn = Arc::new(|_| 0.0);
        let c: VectorFn = Arc::new(|_| vec![0.0]);
        let prob = GreyBoxProblem::builder(1, FnKind::BlackBox, f)
            .black_constraints(1, c, &[0.0], &[1.0])
            .x_bounds(&[0.0], &[1.0])
            .build()
            .unwrap();
        let slack = SlackProblem::new(prob).unwrap();

        let z = DVector::from_vec(vec![0.5]);
        let s = slack.initial_slack(&z);
        assert_eq!(s[0], 0.5);
        assert_eq!(slack_violation(&z, &s), 0.0);

        let z = DVector::from_vec(vec![2.0]);
        let s = slack.initial_slack(&z);
        assert_eq!(s[0], 1.0);
        assert_eq!(slack_violation(&z, &s), 0.5);

        // One-sided box [-1, inf)
        let f: ScalarFn = Arc::new(|_| 0.0);
        let c: VectorFn = Arc::new(|_| vec![0.0]);
        let prob = GreyBoxProblem::builder(1, FnKind::BlackBox, f)
            .black_constraints(1, c, &[-1.0], &[f64::INFINITY])
            .x_bounds(&[0.0], &[1.0])
            .build()
            .unwrap();
        let slack = SlackProblem::new(prob).unwrap();
        let z = DVector::from_vec(vec![-3.0]);
        let s = slack.initial_slack(&z);
        assert_eq!(s[0], -1.0);
        assert_eq!(slack_violation(&z, &s), 2.0);
    }

    #[test]
    fn cv_zero_iff_projection_exact() {
        let prob = one_black();
        for zv in [-3.0, 0.0, 42.0, 100.0, 103.5] {
            let z = DVector::from_vec(vec![zv]);
            let s = prob.initial_slack(&z);
            let cv = prob.constraint_violation(&z);
            let v = slack_violation(&z, &s);
            assert_eq!(cv == 0.0, v == 0.0);
        }
    }

    #[test]
    fn ledger_counts_distinct_uncached_points() {
        let prob = one_black();
        let ledger = EvaluationLedger::new(100);
        let pts = [0.0, 1.0, 0.0, 2.0, 1.0, 3.0];
        for p in pts {
            ledger
                .evaluate(&prob, &DVector::from_vec(vec![p]))
                .unwrap();
        }
        assert_eq!(ledger.bb_calls(), 4);
    }

    #[test]
    fn nan_outputs_are_capped() {
        let f: ScalarFn = Arc::new(|x: &[f64]| 1.0 / x[0]);
        let c: VectorFn = Arc::new(|x: &[f64]| vec![(x[0]).ln()]);
        let prob = GreyBoxProblem::builder(1, FnKind::BlackBox, f)
            .black_constraints(1, c, &[0.0], &[1.0])
            .x_bounds(&[-1.0], &[1.0])
            .build()
            .unwrap();
        let slack = SlackProblem::new(prob).unwrap();
        let ledger = EvaluationLedger::new(10);
        let eval = ledger
            .evaluate(&slack, &DVector::from_vec(vec![-1.0]))
            .unwrap();
        assert!(eval.f.is_finite());
        assert!(eval.z[0].is_finite());
    }
}
