//! Monte Carlo driver: one independent random stream per trial, trials run on
//! a worker pool, records sorted by trial index.

use std::io::Write;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Cell, ExperimentConfig, Objective};
use crate::algorithms::{
    eemax_diagnostics, initialize, maxmin, shannon_baselines, srmax_diagnostics, zfbf_baseline,
    ScaDiagnostics, ShannonObjective, SolveOptions,
};
use crate::error::{Error, Result};
use crate::model::{evaluate, sample_channels_with, BeamSolution, ChannelSet, SolveStatus};

/// Channels of trial `trial`: ChaCha20 seeded with `seed`, stream `trial`.
pub fn trial_channels(cfg: &ExperimentConfig, cell: &Cell, seed: u64, trial: usize) -> Result<ChannelSet> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    sample_channels_with(&cfg.geometry, cell.k_users, cfg.n_tx, &mut rng)
}

/// A design together with how it was judged.
#[derive(Debug, Clone)]
pub struct Solved {
    pub solution: BeamSolution,
    pub feasible: bool,
    pub diagnostics: Option<ScaDiagnostics>,
    /// Common SINR of the Shannon-rate max-min design on the same channels.
    pub reference_sinr: Option<f64>,
}

/// Runs the configured objective on one instance.
pub fn solve_instance(cfg: &ExperimentConfig, cell: &Cell, ch: &ChannelSet) -> Result<Solved> {
    let regime = cfg.regime(cell)?;
    let p_max = cfg.p_max(cell);
    let opts = cfg.solve_options();
    let plain = |solution| Solved {
        solution,
        feasible: true,
        diagnostics: None,
        reference_sinr: None,
    };
    Ok(match cfg.objective {
        Objective::Srmax => {
            let (solution, d) = srmax_diagnostics(ch, &regime, p_max, &opts)?;
            Solved {
                diagnostics: Some(d),
                ..plain(solution)
            }
        }
        Objective::Eemax => {
            let pm = cfg.power_model.model();
            let (solution, d) = eemax_diagnostics(ch, &regime, p_max, &pm, &opts)?;
            Solved {
                diagnostics: Some(d),
                ..plain(solution)
            }
        }
        Objective::Maxmin => {
            let solution = maxmin(ch, &regime, p_max, &opts)?;
            let reference_sinr = reference_sinr(cfg, cell, ch, &opts);
            Solved {
                reference_sinr,
                ..plain(solution)
            }
        }
        Objective::Zfbf => {
            let z = zfbf_baseline(ch, &regime, p_max)?;
            Solved {
                feasible: z.feasible,
                ..plain(z.solution)
            }
        }
        Objective::ShannonSrmax | Objective::ShannonMaxmin => {
            let which = if cfg.objective == Objective::ShannonSrmax {
                ShannonObjective::SumRate
            } else {
                ShannonObjective::MaxMin
            };
            plain(shannon_baselines(ch, p_max, cell.blocklength, cfg.d_bits, which, &opts)?)
        }
        Objective::Minpower => {
            let init = initialize(ch, &regime, p_max)?;
            let mut solution = evaluate(ch, &init.w, &init.p, &regime, false)?;
            solution.objective = solution.total_power();
            plain(solution)
        }
    })
}

fn reference_sinr(cfg: &ExperimentConfig, cell: &Cell, ch: &ChannelSet, opts: &SolveOptions) -> Option<f64> {
    shannon_baselines(ch, cfg.p_max(cell), cell.blocklength, cfg.d_bits, ShannonObjective::MaxMin, opts)
        .ok()
        .map(|s| s.gamma.iter().cloned().fold(f64::INFINITY, f64::min))
}

/// Outcome of one trial. Solution fields are absent when the trial is infeasible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub feasible: bool,
    /// `converged`, `max-iter`, `infeasible` or `error`.
    pub status: String,
    pub objective: Option<f64>,
    pub sum_rate: Option<f64>,
    pub min_rate: Option<f64>,
    pub total_power: Option<f64>,
    pub min_sinr: Option<f64>,
    pub reference_sinr: Option<f64>,
    /// Minimal power the QoS needs, reported for infeasible trials.
    pub required_power: Option<f64>,
    pub rates: Vec<f64>,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub wall_time_s: f64,
}

fn status_name(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Converged => "converged",
        SolveStatus::MaxIter => "max-iter",
        SolveStatus::Infeasible => "infeasible",
    }
}

pub fn run_trial(cfg: &ExperimentConfig, cell: &Cell, seed: u64, trial: usize) -> TrialRecord {
    let start = Instant::now();
    let mut rec = TrialRecord {
        trial,
        seed,
        feasible: false,
        status: "error".into(),
        objective: None,
        sum_rate: None,
        min_rate: None,
        total_power: None,
        min_sinr: None,
        reference_sinr: None,
        required_power: None,
        rates: Vec::new(),
        outer_iterations: 0,
        inner_iterations: 0,
        wall_time_s: 0.0,
    };
    let outcome = trial_channels(cfg, cell, seed, trial).and_then(|ch| solve_instance(cfg, cell, &ch));
    match outcome {
        Ok(s) if s.feasible => {
            let sol = &s.solution;
            rec.feasible = true;
            rec.status = status_name(sol.status).into();
            rec.objective = Some(sol.objective);
            rec.sum_rate = Some(sol.sum_rate());
            rec.min_rate = Some(sol.min_rate());
            rec.total_power = Some(sol.total_power());
            rec.min_sinr = Some(sol.gamma.iter().cloned().fold(f64::INFINITY, f64::min));
            rec.reference_sinr = s.reference_sinr;
            rec.rates = sol.rates.clone();
            rec.outer_iterations = sol.outer_iterations;
            rec.inner_iterations = sol.inner_iterations;
        }
        Ok(_) => rec.status = "infeasible".into(),
        Err(Error::Infeasible { required_power, .. }) => {
            rec.status = "infeasible".into();
            rec.required_power = Some(required_power);
        }
        Err(_) => {}
    }
    rec.wall_time_s = start.elapsed().as_secs_f64();
    rec
}

/// Aggregates over the trials of one cell; means are over feasible trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub objective: Objective,
    pub cell: Cell,
    pub trials: usize,
    pub feasible: usize,
    pub feasible_prob: f64,
    pub mean_objective: Option<f64>,
    pub median_objective: Option<f64>,
    pub mean_sum_rate: Option<f64>,
    pub mean_min_rate: Option<f64>,
    pub mean_total_power: Option<f64>,
}

pub(crate) fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

pub(crate) fn median(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    Some(if s.len() % 2 == 1 { s[m] } else { 0.5 * (s[m - 1] + s[m]) })
}

pub fn summarize(objective: Objective, cell: &Cell, records: &[TrialRecord]) -> McSummary {
    let pick = |f: fn(&TrialRecord) -> Option<f64>| -> Vec<f64> {
        records.iter().filter(|r| r.feasible).filter_map(f).collect()
    };
    let objectives = pick(|r| r.objective);
    let feasible = records.iter().filter(|r| r.feasible).count();
    McSummary {
        objective,
        cell: *cell,
        trials: records.len(),
        feasible,
        feasible_prob: feasible as f64 / records.len().max(1) as f64,
        mean_objective: mean(&objectives),
        median_objective: median(&objectives),
        mean_sum_rate: mean(&pick(|r| r.sum_rate)),
        mean_min_rate: mean(&pick(|r| r.min_rate)),
        mean_total_power: mean(&pick(|r| r.total_power)),
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

/// All trials of one cell. `workers = 0` uses every core.
pub fn run_cell(cfg: &ExperimentConfig, cell: &Cell, workers: usize) -> Result<Vec<TrialRecord>> {
    let seed = cfg.seed()?;
    let mut records: Vec<TrialRecord> = pool(workers)?.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| run_trial(cfg, cell, seed, t))
            .collect()
    });
    records.sort_by_key(|r| r.trial);
    Ok(records)
}

/// Monte Carlo run of a configuration whose axes are all scalar.
pub fn run_monte_carlo(cfg: &ExperimentConfig, workers: usize) -> Result<(McSummary, Vec<TrialRecord>)> {
    cfg.validate()?;
    let axes = cfg.list_axes();
    if !axes.is_empty() {
        return Err(Error::Config(format!(
            "list-valued axes {} need a sweep",
            axes.join(", ")
        )));
    }
    let cell = cfg.cells()[0];
    let records = run_cell(cfg, &cell, workers)?;
    Ok((summarize(cfg.objective, &cell, &records), records))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub const RECORD_HEADER: [&str; 14] = [
    "trial",
    "seed",
    "feasible",
    "status",
    "objective",
    "sum_rate",
    "min_rate",
    "total_power",
    "min_sinr",
    "reference_sinr",
    "required_power",
    "outer_iterations",
    "inner_iterations",
    "rates",
];

pub const CELL_HEADER: [&str; 4] = ["k_users", "blocklength", "snr_db", "epsilon"];

pub(crate) fn cell_fields(c: &Cell) -> Vec<String> {
    vec![
        c.k_users.to_string(),
        c.blocklength.to_string(),
        c.snr_db.to_string(),
        c.epsilon.to_string(),
    ]
}

fn record_fields(r: &TrialRecord) -> Vec<String> {
    let rates: Vec<String> = r.rates.iter().map(|x| x.to_string()).collect();
    vec![
        r.trial.to_string(),
        r.seed.to_string(),
        r.feasible.to_string(),
        r.status.clone(),
        opt(r.objective),
        opt(r.sum_rate),
        opt(r.min_rate),
        opt(r.total_power),
        opt(r.min_sinr),
        opt(r.reference_sinr),
        opt(r.required_power),
        r.outer_iterations.to_string(),
        r.inner_iterations.to_string(),
        rates.join(";"),
    ]
}

/// Trial records as CSV, optionally prefixed by the cell columns.
///
/// Wall time is left out so that reruns compare byte for byte; see
/// [`write_timings`].
pub fn write_records<W: Write>(out: W, rows: &[(Option<Cell>, &[TrialRecord])]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let with_cell = rows.iter().any(|(c, _)| c.is_some());
    let mut header: Vec<&str> = Vec::new();
    if with_cell {
        header.extend(CELL_HEADER);
    }
    header.extend(RECORD_HEADER);
    w.write_record(&header).map_err(csv_err)?;
    for (cell, records) in rows {
        for r in records.iter() {
            let mut f = cell.as_ref().map(cell_fields).unwrap_or_default();
            f.extend(record_fields(r));
            w.write_record(&f).map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::Config(format!("write failed: {e}")))
}

/// Per-trial wall-clock seconds.
pub fn write_timings<W: Write>(out: W, rows: &[(Option<Cell>, &[TrialRecord])]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let with_cell = rows.iter().any(|(c, _)| c.is_some());
    let mut header: Vec<&str> = Vec::new();
    if with_cell {
        header.extend(CELL_HEADER);
    }
    header.extend(["trial", "wall_time_s"]);
    w.write_record(&header).map_err(csv_err)?;
    for (cell, records) in rows {
        for r in records.iter() {
            let mut f = cell.as_ref().map(cell_fields).unwrap_or_default();
            f.extend([r.trial.to_string(), r.wall_time_s.to_string()]);
            w.write_record(&f).map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::Config(format!("write failed: {e}")))
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Config(format!("csv output failed: {e}"))
}
