//! Solver-agnostic MILP models, LP text emission and solver backends.
//!
//! Build a [`LinearModel`], then either write it out with [`emit_lp_file`] or
//! hand it to [`solve`], which dispatches to the configured [`Backend`].

mod highs_backend;
mod lpfile;
mod model;
mod solution;
mod solve;

pub use highs_backend::map_status;
pub use lpfile::{emit_lp_file, format_g17};
pub use model::{is_valid_name, Constraint, ConstraintSense, LinearModel, ModelError, VarId, VarKind, Variable};
pub use solution::{parse_solution, write_solution, SolutionFile};
pub use solve::{solve, Backend, SolveError, SolveOptions, SolveResult, SolveStatus, SOLVER_ENV};
