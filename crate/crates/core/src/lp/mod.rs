//! Exact solver for the batch, linear-cost problem.

mod schedule;
mod simplex;

pub use schedule::{
    build_instance_lp, build_lp, extract_instance_schedule, extract_schedule, solve_linear, Layout,
    LinearPlan, DELTA_EPS,
};
pub use simplex::{
    solve_lp, LpProblem, LpRow, LpSolution, LpStatus, Relation, SimplexStats, MAX_VARIABLES,
};
