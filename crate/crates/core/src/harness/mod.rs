//! Experiment plumbing: configuration, Monte Carlo runs, sweeps, the
//! threshold accuracy table and single-instance dumps.

pub mod config;
pub mod monte_carlo;
pub mod solve;
pub mod sweep;
pub mod table1;

pub use config::{Axis, Cell, ExperimentConfig, Objective, PowerConfig};
pub use monte_carlo::{
    run_cell, run_monte_carlo, run_trial, solve_instance, summarize, trial_channels, write_records,
    write_timings, McSummary, Solved, TrialRecord, RECORD_HEADER,
};
pub use solve::{solve_one, SolveReport};
pub use sweep::{min_rate_split, sweep, write_sweep, CellRun, SweepResult, SweepRow, SWEEP_HEADER};
pub use table1::{default_grid, default_table1, reference_rows, table1_report, write_table1, ReferenceRow, Table1Row};
