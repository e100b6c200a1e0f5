//! Exact solvers running over nice tree decompositions.
//!
//! `cvr` solves capacitated routing (with or without skip penalties) by
//! tracking tour-segment flows through each bag; `centers` solves
//! k-center and k-median by tracking per-vertex coverage. Both are exact
//! on the metric of the graph they are handed, whatever its treewidth —
//! the decomposition only controls the running time.

pub mod centers;
pub mod cvr;

pub use centers::{solve_kcenter_td, solve_kmedian_td, CenterSolution};
pub use cvr::{join_oracle, solve_cvr, solve_cvr_penalties, SolveError};
