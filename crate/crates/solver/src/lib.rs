//! Self-contained mixed-integer linear programming toolkit.
//!
//! The crate provides a solver-agnostic model representation
//! ([`model::Model`]), an LP solver (bounded-variable revised simplex with
//! sparse LU factors, [`simplex`]), deterministic branch-and-bound over
//! binaries and SOS2 sets ([`branch`]), and free-format MPS plus solution
//! file import/export ([`mps`]).

pub mod branch;
pub mod lu;
pub mod model;
pub mod mps;
pub mod simplex;

use std::time::Duration;

use thiserror::Error;

pub use branch::{branch_sos2, solve_milp, MipSolution, MipStatus, NodeRecord, Sos2BranchError};
pub use model::{Constraint, Model, Objective, RowSense, Sense, Sos2Set, VarDef, VarId, VarKind};
pub use mps::{import_solution, parse_mps, write_mps, write_solution};
pub use simplex::{solve_lp, solve_lp_warm, solve_lp_with_bounds, BasisHint, LpSolution, LpStatus, VarBasisStatus};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("numerical breakdown: {0}")]
    Numerical(String),
    #[error("iteration limit reached after {0} simplex iterations")]
    IterationLimit(usize),
}

/// Tolerances and limits shared by the LP and MIP solvers.
#[derive(Clone, Debug)]
pub struct SolverConfig {
    /// Primal feasibility tolerance.
    pub feas_tol: f64,
    /// Reduced-cost optimality tolerance.
    pub opt_tol: f64,
    /// Integrality tolerance for branching and incumbent acceptance.
    pub int_tol: f64,
    /// Relative MIP gap at which the search stops with status `Optimal`.
    pub mip_gap: f64,
    /// Maximum number of branch-and-bound nodes.
    pub node_limit: Option<u64>,
    /// Wall-clock limit for the branch-and-bound search.
    pub time_limit: Option<Duration>,
    /// Worker count. The search is defined to produce results identical to
    /// the single-worker run, and the current implementation always
    /// evaluates nodes serially.
    pub workers: usize,
    /// Record one [`NodeRecord`] per processed node.
    pub keep_node_log: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            feas_tol: 1e-7,
            opt_tol: 1e-7,
            int_tol: 1e-6,
            mip_gap: 1e-6,
            node_limit: None,
            time_limit: None,
            workers: 1,
            keep_node_log: false,
        }
    }
}
