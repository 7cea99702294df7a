//! In-tree dense small-scale solvers: a two-phase simplex kernel for the
//! projected Cauchy directions, a bound-constrained linear least-squares
//! active-set method, a nonmonotone spectral projected gradient method, and
//! the Lagrange-multiplier least-squares estimator built on top of it.

mod blls;
mod lp;
mod multipliers;
mod spg;

pub use blls::{blls_solve, BllsSolution};
pub use lp::{lp_solve, LpError, LpProblem, LpSolution};
pub use multipliers::{estimate_multipliers, ActiveBounds, MultiplierEstimate};
pub use spg::{dykstra_pair, spg_solve, SpgOptions, SpgSolution};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SubsolverError {
    #[error("linear program reported infeasible (internal bug)")]
    Infeasible,
    #[error("linear program reported unbounded (internal bug)")]
    Unbounded,
    #[error("feasible-set projection did not converge")]
    ProjectionFailure,
}
