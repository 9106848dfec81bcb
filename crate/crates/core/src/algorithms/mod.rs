//! Beamforming optimizers: feasibility and initialization, weighted sum-rate
//! maximization, energy-efficiency maximization, max-min fairness, and the
//! zero-forcing and Shannon-rate baselines.
//!
//! All three optimizers work on the dual uplink: powers are optimized for
//! fixed MMSE receivers, the receivers are refreshed, and the final uplink
//! design is mapped to the downlink with the same per-user SINRs.

pub mod sca;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::convex::power::bisect_maxmin_gains;
use crate::convex::{min_power_fixed_point, IpmOptions};
use crate::error::{Error, Result};
use crate::model::{
    downlink_from_gains, duality_transfer, evaluate, gain_matrix, mmse_beamformers, transfer_from_gains, uplink_from_gains, zf_beamformers,
    BeamSolution, CVector, ChannelSet, Direction, PowerModel, SolveStatus,
};
use crate::rate::{make_regime, RateRegime};

pub use sca::{build_sca_subproblem, Boxes, Dinkelbach, Layout, ScaState};
use sca::{min_powers_for, run_inner, InnerProblem};

/// Knobs shared by the optimizers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    /// User weights; `None` means `1/K` each. Ignored by max-min.
    pub alpha: Option<Vec<f64>>,
    pub eps_conv: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    /// Replace the regime by its Shannon-rate counterpart.
    pub shannon_mode: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            alpha: None,
            eps_conv: 1e-4,
            max_outer: 30,
            max_inner: 50,
            shannon_mode: false,
        }
    }
}

impl SolveOptions {
    pub fn weights(&self, k: usize) -> Result<Vec<f64>> {
        let a = match &self.alpha {
            None => vec![1.0 / k as f64; k],
            Some(a) => a.clone(),
        };
        if a.len() != k {
            return Err(Error::Shape(format!("expected {k} weights, got {}", a.len())));
        }
        if a.iter().any(|x| !(*x >= 0.0)) || !a.iter().any(|x| *x > 0.0) {
            return Err(Error::Config("weights must be nonnegative with one positive".into()));
        }
        Ok(a)
    }

    fn regime(&self, regime: &RateRegime) -> Result<RateRegime> {
        if self.shannon_mode && !regime.shannon_mode {
            make_regime(regime.epsilon, regime.n, regime.d_bits, true)
        } else {
            Ok(regime.clone())
        }
    }
}

/// Feasible starting point: minimal-power design meeting `ν₃` for every user.
#[derive(Debug, Clone, PartialEq)]
pub struct InitPoint {
    pub w: Vec<CVector>,
    /// Downlink powers.
    pub p: Vec<f64>,
    /// Uplink powers of the same design.
    pub q: Vec<f64>,
    /// Minimal uplink powers `q̃` for the initial receivers.
    pub q_tilde: Vec<f64>,
}

impl InitPoint {
    pub fn total_power(&self) -> f64 {
        self.p.iter().sum()
    }
}

/// Minimal-power design meeting `ν₃`; infeasible when it needs more than `p_max`.
pub fn initialize(ch: &ChannelSet, regime: &RateRegime, p_max: f64) -> Result<InitPoint> {
    let mp = min_power_fixed_point(ch, regime.nu3, p_max, 1e-10, 10_000).map_err(|e| match e {
        Error::Infeasible { required_power, .. } => Error::Infeasible {
            required_power,
            budget: p_max,
        },
        other => other,
    })?;
    let total = mp.total();
    if total > p_max {
        return Err(Error::Infeasible {
            required_power: total,
            budget: p_max,
        });
    }
    let k = ch.k_users;
    let p = duality_transfer(ch, &mp.w, &vec![regime.nu3; k], Direction::Downlink)?;
    let g = gain_matrix(ch, &mp.w);
    let gamma_bar = downlink_from_gains(&g, &p);
    let q_tilde = transfer_from_gains(&g, &gamma_bar, Direction::Uplink)?;
    Ok(InitPoint {
        w: mp.w,
        p,
        q: mp.q,
        q_tilde,
    })
}

/// Maps an uplink design to the downlink with identical SINRs.
fn to_downlink(
    ch: &ChannelSet,
    w: &[CVector],
    q: &[f64],
    regime: &RateRegime,
) -> Result<BeamSolution> {
    let g = gain_matrix(ch, w);
    let targets = uplink_from_gains(&g, q);
    let p = duality_transfer(ch, w, &targets, Direction::Downlink)?;
    evaluate(ch, w, &p, regime, false)
}

fn weighted(rates: &[f64], alpha: &[f64]) -> f64 {
    rates.iter().zip(alpha).map(|(r, a)| r * a).sum()
}

/// Per-iteration diagnostics for the SCA-based optimizers.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScaDiagnostics {
    /// True objective after every accepted inner iterate, per outer iteration.
    pub inner: Vec<Vec<f64>>,
    /// Objective after each receiver update.
    pub outer: Vec<f64>,
    /// Dinkelbach parameters in the order they were used.
    pub lambdas: Vec<f64>,
    /// Subproblem solutions before recovery, for constraint audits.
    #[serde(skip)]
    pub raw_states: Vec<ScaState>,
    /// Recovered states after each inner loop.
    #[serde(skip)]
    pub states: Vec<ScaState>,
}

/// Weighted sum-rate maximization.
pub fn srmax(ch: &ChannelSet, regime: &RateRegime, p_max: f64, opts: &SolveOptions) -> Result<BeamSolution> {
    srmax_diagnostics(ch, regime, p_max, opts).map(|(s, _)| s)
}

/// [`srmax`] together with its iteration history.
pub fn srmax_diagnostics(
    ch: &ChannelSet,
    regime: &RateRegime,
    p_max: f64,
    opts: &SolveOptions,
) -> Result<(BeamSolution, ScaDiagnostics)> {
    let regime = opts.regime(regime)?;
    let alpha = opts.weights(ch.k_users)?;
    let init = initialize(ch, &regime, p_max)?;
    let caps = ch.sinr_caps(p_max);
    let mut w = init.w.clone();
    let mut q = init.q.clone();
    let mut q_tilde = init.q_tilde.clone();
    let mut diag = ScaDiagnostics::default();
    let mut inner_total = 0;
    let mut prev: Option<f64> = None;
    let mut status = SolveStatus::MaxIter;
    let mut outer = 0;

    while outer < opts.max_outer {
        outer += 1;
        let g = gain_matrix(ch, &w);
        let prob = InnerProblem {
            gains: &g,
            regime: &regime,
            p_max,
            alpha: &alpha,
            dinkelbach: None,
            eps_conv: opts.eps_conv,
            max_inner: opts.max_inner,
            ipm: IpmOptions::default(),
        };
        let start = ScaState::recover(&q, &g, caps.clone(), q_tilde.clone());
        let out = run_inner(&prob, start);
        inner_total += out.solves;
        q = out.state.q.clone();
        diag.inner.push(out.objectives);
        diag.raw_states.extend(out.raw);
        diag.states.push(out.state);

        w = mmse_beamformers(ch, &q)?;
        let g = gain_matrix(ch, &w);
        q_tilde = min_powers_for(&g, regime.nu3, &q);
        let xi = weighted(
            &uplink_from_gains(&g, &q).iter().map(|&x| regime.rate(x)).collect::<Vec<_>>(),
            &alpha,
        );
        diag.outer.push(xi);
        if let Some(p) = prev {
            if (xi - p).abs() / p.abs().max(1e-12) <= opts.eps_conv {
                status = SolveStatus::Converged;
                break;
            }
        }
        prev = Some(xi);
    }

    let mut sol = to_downlink(ch, &w, &q, &regime)?;
    sol.objective = weighted(&sol.rates, &alpha);
    sol.status = status;
    sol.outer_iterations = outer;
    sol.inner_iterations = inner_total;
    sol.trace = diag.inner.iter().flatten().cloned().collect();
    Ok((sol, diag))
}

/// Energy efficiency `Σα_kR_k / (ηΣp_k + N_tP_c + P₀)` of a design.
pub fn energy_efficiency(sol: &BeamSolution, alpha: &[f64], power: &PowerModel, n_tx: usize) -> f64 {
    weighted(&sol.rates, alpha) / power.consumed(sol.total_power(), n_tx)
}

/// Energy-efficiency maximization by Dinkelbach's method around the SCA loop.
pub fn eemax(
    ch: &ChannelSet,
    regime: &RateRegime,
    p_max: f64,
    power: &PowerModel,
    opts: &SolveOptions,
) -> Result<BeamSolution> {
    eemax_diagnostics(ch, regime, p_max, power, opts).map(|(s, _)| s)
}

/// [`eemax`] together with its iteration history.
pub fn eemax_diagnostics(
    ch: &ChannelSet,
    regime: &RateRegime,
    p_max: f64,
    power: &PowerModel,
    opts: &SolveOptions,
) -> Result<(BeamSolution, ScaDiagnostics)> {
    power.validate()?;
    let regime = opts.regime(regime)?;
    let alpha = opts.weights(ch.k_users)?;
    let init = initialize(ch, &regime, p_max)?;
    let caps = ch.sinr_caps(p_max);
    let mut w = init.w.clone();
    let mut q = init.q.clone();
    let mut q_tilde = init.q_tilde.clone();
    let mut lambda = 0.0;
    let mut diag = ScaDiagnostics::default();
    let mut inner_total = 0;
    let mut prev: Option<f64> = None;
    let mut status = SolveStatus::MaxIter;
    let mut outer = 0;
    let ratio = |g: &DMatrix<f64>, q: &[f64]| {
        let num = weighted(
            &uplink_from_gains(g, q).iter().map(|&x| regime.rate(x)).collect::<Vec<_>>(),
            &alpha,
        );
        (num, power.consumed(q.iter().sum(), ch.n_tx))
    };

    while outer < opts.max_outer {
        outer += 1;
        let g = gain_matrix(ch, &w);
        for _ in 0..opts.max_inner {
            diag.lambdas.push(lambda);
            let prob = InnerProblem {
                gains: &g,
                regime: &regime,
                p_max,
                alpha: &alpha,
                dinkelbach: Some(Dinkelbach {
                    lambda,
                    power: *power,
                    n_tx: ch.n_tx,
                }),
                eps_conv: opts.eps_conv,
                max_inner: opts.max_inner,
                ipm: IpmOptions::default(),
            };
            let start = ScaState::recover(&q, &g, caps.clone(), q_tilde.clone());
            let out = run_inner(&prob, start);
            inner_total += out.solves;
            q = out.state.q.clone();
            let f_lambda = *out.objectives.last().unwrap_or(&0.0);
            diag.inner.push(out.objectives);
            diag.raw_states.extend(out.raw);
            diag.states.push(out.state);
            let (num, den) = ratio(&g, &q);
            if f_lambda.abs() < opts.eps_conv {
                break;
            }
            lambda = num / den;
        }

        w = mmse_beamformers(ch, &q)?;
        let g = gain_matrix(ch, &w);
        q_tilde = min_powers_for(&g, regime.nu3, &q);
        let (num, den) = ratio(&g, &q);
        let xi = num / den;
        diag.outer.push(xi);
        if let Some(p) = prev {
            if (xi - p).abs() / p.abs().max(1e-12) <= opts.eps_conv {
                status = SolveStatus::Converged;
                break;
            }
        }
        prev = Some(xi);
    }

    let mut sol = to_downlink(ch, &w, &q, &regime)?;
    sol.objective = energy_efficiency(&sol, &alpha, power, ch.n_tx);
    sol.status = status;
    sol.outer_iterations = outer;
    sol.inner_iterations = inner_total;
    sol.trace = diag.outer.clone();
    Ok((sol, diag))
}

/// Max-min rate design: common-SINR bisection alternated with MMSE updates.
pub fn maxmin(ch: &ChannelSet, regime: &RateRegime, p_max: f64, opts: &SolveOptions) -> Result<BeamSolution> {
    let regime = opts.regime(regime)?;
    let init = initialize(ch, &regime, p_max)?;
    let hi = ch.sinr_caps(p_max).into_iter().fold(f64::INFINITY, f64::min);
    let mut w = init.w;
    let mut best: Option<(Vec<CVector>, f64, Vec<f64>)> = None;
    let mut trace = Vec::new();
    let mut status = SolveStatus::MaxIter;
    let mut outer = 0;

    while outer < opts.max_outer {
        outer += 1;
        let g = gain_matrix(ch, &w);
        let lo = regime.nu3.min(hi);
        let (mu, q) = bisect_maxmin_gains(&g, p_max, lo, hi.max(lo), 1e-8)?;
        let xi = regime.rate(mu);
        let prev = trace.last().cloned();
        trace.push(xi);
        let next_w = mmse_beamformers(ch, &q)?;
        best = Some((w, mu, q));
        w = next_w;
        if let Some(p) = prev {
            if (xi - p).abs() / f64::abs(p).max(1e-12) <= opts.eps_conv {
                status = SolveStatus::Converged;
                break;
            }
        }
    }

    let (w, mu, _) = best.ok_or_else(|| Error::Numeric("max-min loop did not run".into()))?;
    let k = ch.k_users;
    let p = duality_transfer(ch, &w, &vec![mu; k], Direction::Downlink)?;
    let mut sol = evaluate(ch, &w, &p, &regime, false)?;
    sol.objective = sol.min_rate();
    sol.status = status;
    sol.outer_iterations = outer;
    sol.trace = trace;
    Ok(sol)
}

/// Zero-forcing with equal power split, and whether every user reaches `ν₃`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZfbfOutcome {
    pub solution: BeamSolution,
    pub feasible: bool,
}

/// Zero-forcing beams, `p_k = P/K`, rates floored at zero.
pub fn zfbf_baseline(ch: &ChannelSet, regime: &RateRegime, p_max: f64) -> Result<ZfbfOutcome> {
    let w = zf_beamformers(ch)?;
    let k = ch.k_users;
    let sol = evaluate(ch, &w, &vec![p_max / k as f64; k], regime, true)?;
    let feasible = sol.gamma.iter().all(|&g| g >= regime.nu3);
    Ok(ZfbfOutcome { solution: sol, feasible })
}

/// Which Shannon-rate problem to solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShannonObjective {
    SumRate,
    MaxMin,
}

/// Sum-rate or max-min design with `ϑ = 0` and `ν̃₃ = 2^{D/n} − 1`.
pub fn shannon_baselines(
    ch: &ChannelSet,
    p_max: f64,
    n: u32,
    d_bits: u32,
    objective: ShannonObjective,
    opts: &SolveOptions,
) -> Result<BeamSolution> {
    let regime = crate::rate::shannon_regime(n, d_bits)?;
    match objective {
        ShannonObjective::SumRate => srmax(ch, &regime, p_max, opts),
        ShannonObjective::MaxMin => maxmin(ch, &regime, p_max, opts),
    }
}
