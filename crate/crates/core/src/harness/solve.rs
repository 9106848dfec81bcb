//! Single-instance solve with a full JSON dump.

use serde::{Deserialize, Serialize};

use super::config::{Cell, ExperimentConfig, Objective};
use super::monte_carlo::{solve_instance, trial_channels};
use crate::algorithms::ScaDiagnostics;
use crate::error::{Error, Result};
use crate::model::{gain_matrix, BeamSolution, ChannelSet};
use crate::rate::RateRegime;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub objective: Objective,
    pub cell: Cell,
    pub seed: u64,
    pub p_max: f64,
    pub regime: RateRegime,
    /// `converged`, `max-iter` or `infeasible`.
    pub status: String,
    pub feasible: bool,
    pub required_power: Option<f64>,
    pub solution: Option<BeamSolution>,
    /// Largest `|h̄_lᴴw_k|²` over `l ≠ k`.
    pub max_cross_gain: Option<f64>,
    pub diagnostics: Option<ScaDiagnostics>,
    pub channels: ChannelSet,
}

/// Samples the channels of trial 0 for `seed` and runs the configured objective.
pub fn solve_one(cfg: &ExperimentConfig, seed: u64) -> Result<SolveReport> {
    let cfg = ExperimentConfig {
        seed: Some(seed),
        ..cfg.clone()
    };
    cfg.validate()?;
    if !cfg.list_axes().is_empty() {
        return Err(Error::Config("solve takes scalar axes only".into()));
    }
    let cell = cfg.cells()[0];
    let channels = trial_channels(&cfg, &cell, seed, 0)?;
    let mut report = SolveReport {
        objective: cfg.objective,
        cell,
        seed,
        p_max: cfg.p_max(&cell),
        regime: cfg.regime(&cell)?,
        status: "infeasible".into(),
        feasible: false,
        required_power: None,
        solution: None,
        max_cross_gain: None,
        diagnostics: None,
        channels,
    };
    match solve_instance(&cfg, &cell, &report.channels) {
        Ok(s) => {
            let g = gain_matrix(&report.channels, &s.solution.w);
            let k = g.nrows();
            report.max_cross_gain = Some(
                (0..k)
                    .flat_map(|l| (0..k).filter(move |&j| j != l).map(move |j| (l, j)))
                    .map(|(l, j)| g[(l, j)])
                    .fold(0.0, f64::max),
            );
            report.feasible = s.feasible;
            report.status = if s.feasible {
                serde_json::to_value(s.solution.status)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_owned))
                    .unwrap_or_default()
            } else {
                "infeasible".into()
            };
            report.solution = Some(s.solution);
            report.diagnostics = s.diagnostics;
        }
        Err(Error::Infeasible { required_power, .. }) => {
            report.required_power = Some(required_power);
        }
        Err(e) => return Err(e),
    }
    Ok(report)
}
