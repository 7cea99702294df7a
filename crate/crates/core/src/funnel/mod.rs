//! Trust-funnel sequential quadratic local search over interpolation
//! surrogates: subspace minimization on (nearly) active bounds, a criticality
//! step, normal and tangent steps, iteration classification with funnel and
//! trust-region updates, and a second-order correction after rejected
//! optimality steps.

mod context;
mod models;
mod search;
mod steps;

pub use context::{ActiveProblem, SearchCtx};
pub use search::local_search;

use nalgebra::DVector;
use serde::Serialize;

use crate::interp::{InitDegree, InitMode, ModelVariant};

/// All tunable constants of the local search. Trust-region constants follow
/// the published experimental setup; the remaining ones are configurable
/// defaults.
#[derive(Clone, Debug)]
pub struct FunnelParams {
    /// Criticality threshold.
    pub epsilon: f64,
    /// Initial criticality loop threshold (tightened toward `epsilon`).
    pub epsilon0: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub eta3: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    /// Shrink caps are `nu_max_factor * n`.
    pub nu_max_factor: usize,
    /// Normal-step scaling bound.
    pub kappa_n: f64,
    /// Fraction of the trust radius the normal step may take before the
    /// tangent step is skipped. Zero means feasibility-first.
    pub kappa_r: f64,
    pub kappa_delta: f64,
    pub kappa_zs: f64,
    pub kappa_zn: f64,
    pub kappa_tx1: f64,
    pub kappa_tx2: f64,
    pub kappa_za: f64,
    pub kappa_zr: f64,
    /// Criticality tightening factor.
    pub alpha: f64,
    /// Radius reset scaling in the criticality step.
    pub beta: f64,
    /// Near-active bound threshold is `eps_b_rel * (1 + |bound|)`.
    pub eps_b_rel: f64,
    pub delta0_f: f64,
    pub delta0_z: f64,
    pub delta_max: f64,
    /// Poisedness target for repairs.
    pub lambda_target: f64,
    /// Far-point fraction in the null-iteration geometry improvement.
    pub xi_far: f64,
    /// Geometry error threshold triggering that improvement.
    pub eps_mu: f64,
    /// Far/close split factor in the self-correcting update.
    pub zeta: f64,
    pub variant: ModelVariant,
    pub init_mode: InitMode,
    pub init_degree: InitDegree,
    /// Max-abs-entry threshold below which the tangent model is treated as
    /// linear and routed to the LP kernel.
    pub b_norm_eps: f64,
    pub dykstra_cap: usize,
    pub dykstra_tol: f64,
    /// Consecutive null iterations without any state change before the
    /// search gives up.
    pub mu_stall_cap: usize,
    /// Whether to record per-iteration trace records.
    pub trace: bool,
}

impl Default for FunnelParams {
    fn default() -> Self {
        FunnelParams {
            epsilon: 1e-4,
            epsilon0: 1e-2,
            eta1: 1e-4,
            eta2: 0.9,
            eta3: 0.6,
            gamma1: 0.5,
            gamma2: 2.0,
            nu_max_factor: 20,
            kappa_n: 100.0,
            kappa_r: 0.9,
            kappa_delta: 0.01,
            kappa_zs: 2.0,
            kappa_zn: 0.1,
            kappa_tx1: 0.9,
            kappa_tx2: 0.5,
            kappa_za: 100.0,
            kappa_zr: 2.0,
            alpha: 0.1,
            beta: 1.0,
            eps_b_rel: 1e-4,
            delta0_f: 1.0,
            delta0_z: 1.0,
            delta_max: 1e5,
            lambda_target: 100.0,
            xi_far: 0.5,
            eps_mu: 1e-3,
            zeta: 1.0,
            variant: ModelVariant::MinL2,
            init_mode: InitMode::Simplex,
            init_degree: InitDegree::Linear,
            b_norm_eps: 1e-10,
            dykstra_cap: 200,
            dykstra_tol: 1e-10,
            mu_stall_cap: 5,
            trace: false,
        }
    }
}

impl FunnelParams {
    /// Feasibility-first mode: tangent steps only once the normal step
    /// vanishes.
    pub fn feasibility_first(mut self) -> Self {
        self.kappa_r = 0.0;
        self
    }

    /// Monotone bounding function gating the tangent step: the optimality
    /// measure must dominate it before optimality work is spent.
    pub fn omega_t(&self, z_norm: f64) -> f64 {
        0.01 * z_norm.min(1.0)
    }
}

/// Funnel-bound tightening applied after an accepted feasibility iteration:
/// `max[k1 vmax, v+ + k2 (v - v+)]` with both factors in (0, 1).
pub(crate) fn tightened_funnel_bound(v_max: f64, v: f64, v_plus: f64, k1: f64, k2: f64) -> f64 {
    (k1 * v_max).max(v_plus + k2 * (v - v_plus))
}

/// Radius growth on very successful iterations:
/// `min[max[gamma2 ||step||, delta], delta_max]`.
pub(crate) fn grown_radius(gamma2: f64, step_norm: f64, delta: f64, delta_max: f64) -> f64 {
    (gamma2 * step_norm).max(delta).min(delta_max)
}

/// Why a local search stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum StopReason {
    Criticality,
    InfeasibleStationary,
    BudgetExhausted,
    Stalled,
    IterationCap,
}

/// One per-iteration trace record, emitted as JSON lines in verbose mode and
/// consumed by the invariant checks.
#[derive(Clone, Debug, Serialize)]
pub struct IterationRecord {
    pub k: usize,
    pub depth: usize,
    pub iter_type: &'static str,
    pub delta_f: f64,
    pub delta_z: f64,
    pub delta: f64,
    pub v: f64,
    pub v_max: f64,
    pub pi_f: Option<f64>,
    pub pi_v: Option<f64>,
    pub y_size: usize,
    pub bb_calls: usize,
    pub accepted: bool,
    pub d_inf: f64,
    pub n_inf: f64,
    pub n_scale_bound: f64,
    pub jt_norm: f64,
    pub j_norm: f64,
    pub t_norm: f64,
    pub iterate_in_box: bool,
}

/// Result of one local search.
#[derive(Clone, Debug)]
pub struct LocalSearchOutcome {
    pub x: DVector<f64>,
    pub s: DVector<f64>,
    pub f: f64,
    pub cv: f64,
    pub multipliers: DVector<f64>,
    pub pi_f: Option<f64>,
    /// Black-box calls charged during this search.
    pub evaluations: usize,
    pub stop: StopReason,
    pub converged: bool,
    pub trace: Vec<IterationRecord>,
}
