//! Derivative-free global optimization for nonlinearly constrained grey-box
//! and black-box problems.
//!
//! The solver couples a clustering multistart (uniform sampling, merit-based
//! ranking and a shrinking critical exclusion distance) with a trust-funnel
//! sequential quadratic local search that works on polynomial interpolation
//! surrogates of the black-box functions. White-box functions and their
//! derivatives are used directly. Range constraints are handled through an
//! internal slack reformulation; `x` bounds are never violated.

pub mod bench;
pub mod funnel;
pub mod interp;
pub mod mlsl;
pub mod problem;
pub mod subsolvers;

pub use funnel::{local_search, FunnelParams, IterationRecord, LocalSearchOutcome, StopReason};
pub use mlsl::{
    critical_radius, global_search, GlobalSummary, LocalMinimumRecord, MlslError, MultistartConfig,
};
pub use problem::{
    EvalError, EvaluationLedger, FnKind, GreyBoxProblem, SlackIterate, SlackProblem,
    FEASIBILITY_TOL,
};
