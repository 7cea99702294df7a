//! Per-search bookkeeping: the reduced (subspace) view of a problem, the
//! shared evaluation ledger with a per-search cap, the registry of explored
//! subspaces and the trace sink.

use std::cell::{Cell, RefCell};
use std::collections::BTreeSet;
use std::collections::HashSet;
use std::sync::Arc;

use nalgebra::DVector;

use crate::problem::{CachedEval, EvalError, EvaluationLedger, SlackProblem};

use super::{FunnelParams, IterationRecord};

/// Identifies a subspace by the full-space indices pinned at their lower and
/// upper bounds.
pub type SubspaceKey = (BTreeSet<usize>, BTreeSet<usize>);

/// A view of the problem restricted to free coordinates; the remaining
/// coordinates are pinned at bound values. All funnel math runs in reduced
/// coordinates, lifting to full space only for evaluations.
#[derive(Clone, Debug)]
pub struct ActiveProblem {
    /// Full-space indices of the free coordinates, ascending.
    pub free: Vec<usize>,
    /// Full-dimension template holding the pinned values.
    template: DVector<f64>,
    pub pinned_lower: BTreeSet<usize>,
    pub pinned_upper: BTreeSet<usize>,
    /// Bounds of the free coordinates.
    pub lo: DVector<f64>,
    pub hi: DVector<f64>,
}

impl ActiveProblem {
    /// Full-space view; coordinates with zero box width are pre-pinned so
    /// interpolation never sees a degenerate direction.
    pub fn full_space(slack: &SlackProblem, x0: &DVector<f64>) -> Self {
        let n = slack.n();
        let mut free = Vec::new();
        let mut pinned_lower = BTreeSet::new();
        let mut template = x0.clone();
        for i in 0..n {
            let l = slack.parent.l_x[i];
            let u = slack.parent.u_x[i];
            if l.is_finite() && u.is_finite() && u - l <= 0.0 {
                pinned_lower.insert(i);
                template[i] = l;
            } else {
                free.push(i);
            }
        }
        let lo = DVector::from_fn(free.len(), |k, _| slack.parent.l_x[free[k]]);
        let hi = DVector::from_fn(free.len(), |k, _| slack.parent.u_x[free[k]]);
        ActiveProblem {
            free,
            template,
            pinned_lower,
            pinned_upper: BTreeSet::new(),
            lo,
            hi,
        }
    }

    pub fn n_red(&self) -> usize {
        self.free.len()
    }

    pub fn lift(&self, xr: &DVector<f64>) -> DVector<f64> {
        let mut xf = self.template.clone();
        for (k, &i) in self.free.iter().enumerate() {
            xf[i] = xr[k];
        }
        xf
    }

    pub fn restrict(&self, xf: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.free.len(), |k, _| xf[self.free[k]])
    }

    pub fn clamp(&self, xr: &mut DVector<f64>) {
        for k in 0..xr.len() {
            xr[k] = xr[k].clamp(self.lo[k], self.hi[k]);
        }
    }

    pub fn in_box(&self, xr: &DVector<f64>) -> bool {
        (0..xr.len()).all(|k| xr[k] >= self.lo[k] && xr[k] <= self.hi[k])
    }

    pub fn key(&self) -> SubspaceKey {
        (self.pinned_lower.clone(), self.pinned_upper.clone())
    }

    /// Pins additional reduced coordinates (by reduced index) at their lower
    /// or upper bound, around the current reduced point.
    pub fn pin(&self, xr: &DVector<f64>, at_lower: &[usize], at_upper: &[usize]) -> Self {
        let mut template = self.lift(xr);
        let mut pinned_lower = self.pinned_lower.clone();
        let mut pinned_upper = self.pinned_upper.clone();
        let drop: HashSet<usize> = at_lower.iter().chain(at_upper).copied().collect();
        for &k in at_lower {
            let i = self.free[k];
            pinned_lower.insert(i);
            template[i] = self.lo[k];
        }
        for &k in at_upper {
            let i = self.free[k];
            pinned_upper.insert(i);
            template[i] = self.hi[k];
        }
        let free: Vec<usize> = self
            .free
            .iter()
            .enumerate()
            .filter(|(k, _)| !drop.contains(k))
            .map(|(_, &i)| i)
            .collect();
        let lo = DVector::from_fn(free.len(), |k, _| {
            let pos = self.free.iter().position(|&i| i == free[k]).unwrap();
            self.lo[pos]
        });
        let hi = DVector::from_fn(free.len(), |k, _| {
            let pos = self.free.iter().position(|&i| i == free[k]).unwrap();
            self.hi[pos]
        });
        ActiveProblem {
            free,
            template,
            pinned_lower,
            pinned_upper,
            lo,
            hi,
        }
    }
}

/// Shared state of one local search (including its subspace recursions).
pub struct SearchCtx<'a> {
    pub slack: &'a SlackProblem,
    pub ledger: &'a EvaluationLedger,
    pub params: &'a FunnelParams,
    /// Black-box calls charged within this search.
    used: Cell<usize>,
    cap: usize,
    pub explored: RefCell<HashSet<SubspaceKey>>,
    pub trace: RefCell<Vec<IterationRecord>>,
}

impl<'a> SearchCtx<'a> {
    pub fn new(
        slack: &'a SlackProblem,
        ledger: &'a EvaluationLedger,
        params: &'a FunnelParams,
        cap: usize,
    ) -> Self {
        SearchCtx {
            slack,
            ledger,
            params,
            used: Cell::new(0),
            cap,
            explored: RefCell::new(HashSet::new()),
            trace: RefCell::new(Vec::new()),
        }
    }

    pub fn used(&self) -> usize {
        self.used.get()
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    /// Evaluates at a full-space point, enforcing both the global budget and
    /// this search's own cap. Cache hits stay free.
    pub fn eval(&self, xf: &DVector<f64>) -> Result<Arc<CachedEval>, EvalError> {
        let fresh = !self.ledger.is_cached(xf);
        if fresh && self.slack.charges_bb() {
            if self.used.get() >= self.cap {
                return Err(EvalError::BudgetExhausted);
            }
            let out = self.ledger.evaluate(self.slack, xf)?;
            self.used.set(self.used.get() + 1);
            return Ok(out);
        }
        self.ledger.evaluate(self.slack, xf)
    }

    /// Evaluation row stored with each sample point: `[f, z_1, ..., z_m]`.
    pub fn value_row(&self, eval: &CachedEval) -> DVector<f64> {
        let m = self.slack.m;
        let mut row = DVector::zeros(1 + m);
        row[0] = eval.f;
        for j in 0..m {
            row[1 + j] = eval.z[j];
        }
        row
    }

    pub fn record(&self, rec: IterationRecord) {
        if self.params.trace {
            self.trace.borrow_mut().push(rec);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{FnKind, GreyBoxProblem, ScalarFn, VectorFn};

    fn slack2() -> SlackProblem {
        let f: ScalarFn = Arc::new(|x: &[f64]| x[0] + x[1]);
        let c: VectorFn = Arc::new(|x: &[f64]| vec![x[0] * x[1]]);
        let prob = GreyBoxProblem::builder(2, FnKind::BlackBox, f)
            .black_constraints(1, c, &[0.0], &[1.0])
            .x_bounds(&[0.0, -1.0], &[2.0, 1.0])
            .build()
            .unwrap();
        SlackProblem::new(prob).unwrap()
    }

    #[test]
    fn lift_restrict_roundtrip() {
        let slack = slack2();
        let x0 = DVector::from_vec(vec![1.0, 0.5]);
        let ap = ActiveProblem::full_space(&slack, &x0);
        assert_eq!(ap.n_red(), 2);
        let sub = ap.pin(&ap.restrict(&x0), &[0], &[]);
        assert_eq!(sub.n_red(), 1);
        let xr = DVector::from_vec(vec![0.25]);
        let xf = sub.lift(&xr);
        assert_eq!(xf[0], 0.0); // pinned at lower bound
        assert_eq!(xf[1], 0.25);
        assert_eq!(sub.restrict(&xf), xr);
        assert!(sub.pinned_lower.contains(&0));
    }

    #[test]
    fn search_cap_is_enforced() {
        let slack = slack2();
        let ledger = EvaluationLedger::new(100);
        let params = FunnelParams::default();
        let ctx = SearchCtx::new(&slack, &ledger, &params, 2);
        for i in 0..2 {
            ctx.eval(&DVector::from_vec(vec![i as f64 * 0.5, 0.0])).unwrap();
        }
        let err = ctx
            .eval(&DVector::from_vec(vec![1.7, 0.0]))
            .unwrap_err();
        assert_eq!(err, EvalError::BudgetExhausted);
        // A cached point is still fine.
        assert!(ctx.eval(&DVector::from_vec(vec![0.0, 0.0])).is_ok());
        assert_eq!(ctx.used(), 2);
    }
}
