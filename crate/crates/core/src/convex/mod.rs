//! Self-contained solvers used by the optimizers.

pub mod ipm;
pub mod power;

pub use ipm::{
    solve_ipm, solve_ipm_with, ConcaveObjective, IpmOptions, IpmStatus, LinearRow, QuadRow,
    SeparableObjective, SmoothConvexProgram, SolverReport, Sparse, TraceRow,
};
pub use power::{bisect_maxmin, maxmin_feasible, min_power_fixed_point, MinPower};
