//! Parameter sweeps over one or two axes, reported in long format.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::config::{Cell, ExperimentConfig, Objective};
use super::monte_carlo::{cell_fields, csv_err, mean, run_cell, summarize, McSummary, TrialRecord, CELL_HEADER};
use crate::error::{Error, Result};
use crate::rate::dispersion;

/// One `(cell, statistic)` value. Undefined statistics carry no value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub cell: Cell,
    pub objective: Objective,
    pub statistic: String,
    pub value: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct CellRun {
    pub cell: Cell,
    pub summary: McSummary,
    pub records: Vec<TrialRecord>,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub runs: Vec<CellRun>,
    pub rows: Vec<SweepRow>,
}

/// Minimum-rate split of a max-min design at its common SINR `γ`:
/// the finite-blocklength rate, the dispersion penalty, and their sum `ln(1+γ)`.
pub fn min_rate_split(gamma: f64, vartheta: f64) -> (f64, f64) {
    let error = vartheta * dispersion(gamma).sqrt();
    ((1.0 + gamma).ln() - error, error)
}

/// Runs every cell of the grid with the same seed, so cells share channels.
///
/// Besides per-cell means over feasible trials, `common_*` statistics average
/// over the trials that are feasible in every cell. Max-min sweeps also split
/// the minimum rate at the design's SINR `γ`: `min_rate_achieved` plus
/// `min_rate_penalty` equals `min_rate_capacity = ln(1+γ)`, and
/// `min_rate_shannon_design` is `ln(1+γ)` of the Shannon-rate max-min design.
pub fn sweep(cfg: &ExperimentConfig, workers: usize) -> Result<SweepResult> {
    cfg.validate()?;
    let axes = cfg.list_axes();
    if axes.is_empty() || axes.len() > 2 {
        return Err(Error::Config(format!(
            "a sweep needs one or two list-valued axes, got {}",
            axes.len()
        )));
    }
    let mut runs = Vec::new();
    for cell in cfg.cells() {
        let records = run_cell(cfg, &cell, workers)?;
        runs.push(CellRun {
            cell,
            summary: summarize(cfg.objective, &cell, &records),
            records,
        });
    }

    let common: Vec<bool> = (0..cfg.trials)
        .map(|t| runs.iter().all(|r| r.records[t].feasible))
        .collect();
    let mut rows = Vec::new();
    for run in &runs {
        let mut push = |name: &str, value: Option<f64>| {
            rows.push(SweepRow {
                cell: run.cell,
                objective: cfg.objective,
                statistic: name.into(),
                value,
            })
        };
        let s = &run.summary;
        push("trials", Some(s.trials as f64));
        push("feasible", Some(s.feasible as f64));
        push("feasible_prob", Some(s.feasible_prob));
        push("mean_objective", s.mean_objective);
        push("median_objective", s.median_objective);
        push("mean_sum_rate", s.mean_sum_rate);
        push("mean_min_rate", s.mean_min_rate);
        push("mean_total_power", s.mean_total_power);

        let shared: Vec<&TrialRecord> = run.records.iter().filter(|r| common[r.trial]).collect();
        let over = |f: fn(&TrialRecord) -> Option<f64>| mean(&shared.iter().filter_map(|r| f(r)).collect::<Vec<_>>());
        push("common_trials", Some(shared.len() as f64));
        push("common_mean_objective", over(|r| r.objective));
        push("common_mean_sum_rate", over(|r| r.sum_rate));

        if cfg.objective == Objective::Maxmin {
            let vartheta = cfg.regime(&run.cell)?.vartheta;
            let feasible: Vec<&TrialRecord> = run.records.iter().filter(|r| r.feasible).collect();
            let gammas: Vec<f64> = feasible.iter().filter_map(|r| r.min_sinr).collect();
            let split: Vec<(f64, f64)> = gammas.iter().map(|&g| min_rate_split(g, vartheta)).collect();
            let trad: Vec<f64> = feasible
                .iter()
                .filter_map(|r| r.reference_sinr)
                .map(|g| (1.0 + g).ln())
                .collect();
            push("min_rate_achieved", mean(&split.iter().map(|s| s.0).collect::<Vec<_>>()));
            push("min_rate_penalty", mean(&split.iter().map(|s| s.1).collect::<Vec<_>>()));
            push("min_rate_capacity", mean(&gammas.iter().map(|g| (1.0 + g).ln()).collect::<Vec<_>>()));
            push("min_rate_shannon_design", mean(&trad));
        }
    }
    Ok(SweepResult { runs, rows })
}

pub const SWEEP_HEADER: [&str; 7] = [
    "k_users",
    "blocklength",
    "snr_db",
    "epsilon",
    "objective",
    "statistic",
    "value",
];

pub fn write_sweep<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    debug_assert_eq!(&SWEEP_HEADER[..4], &CELL_HEADER[..]);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER).map_err(csv_err)?;
    for r in rows {
        let mut f = cell_fields(&r.cell);
        f.push(r.objective.name().into());
        f.push(r.statistic.clone());
        f.push(r.value.map(|v| v.to_string()).unwrap_or_default());
        w.write_record(&f).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Config(format!("write failed: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::Axis;

    #[test]
    fn split_adds_up_to_shannon_rate() {
        for g in [0.5, 3.0, 40.0] {
            let (a, e) = min_rate_split(g, 0.37);
            assert!((a + e - (1.0 + g).ln()).abs() < 1e-12);
            assert!(e > 0.0);
        }
    }

    #[test]
    fn axis_count_is_checked() {
        let base = ExperimentConfig {
            seed: Some(1),
            trials: 1,
            force: true,
            objective: Objective::Minpower,
            ..Default::default()
        };
        assert!(sweep(&base, 1).is_err());
        let three = ExperimentConfig {
            k_users: Axis::Many(vec![2, 4]),
            snr_db: Axis::Many(vec![15.0, 20.0]),
            epsilon: Axis::Many(vec![1e-2, 1e-4]),
            ..base.clone()
        };
        assert!(sweep(&three, 1).is_err());
        let two = ExperimentConfig {
            k_users: Axis::Many(vec![2, 4]),
            snr_db: Axis::Many(vec![15.0, 20.0]),
            ..base
        };
        let res = sweep(&two, 1).unwrap();
        assert_eq!(res.runs.len(), 4);
        assert!(res.rows.iter().any(|r| r.statistic == "feasible_prob"));
    }
}
