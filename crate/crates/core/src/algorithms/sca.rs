//! Successive convex approximation of the fixed-beamformer power problem.
//!
//! For fixed receivers the uplink design is written with auxiliary variables
//! `(q, φ, ψ, ϕ, θ, a, b)`: `φ`/`ϕ` bracket the SINR, `ψ` tracks the dispersion,
//! `θ ≥ √ψ`, and `a`, `b` stand in for the bilinear products `φ_k q_l`, `ϕ_k q_l`
//! through McCormick envelopes. The concave pieces are linearized at the
//! current dispersion point, giving a smooth convex program per iteration.
//!
//! Each subproblem solution is recovered to an exact point (auxiliaries reset
//! from the true SINRs) and accepted only if it keeps every user above `ν₃`
//! and does not lower the true objective. When the true gain falls well short
//! of the model gain, the envelope boxes shrink around the current iterate,
//! which tightens the relaxation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::convex::{
    solve_ipm_with, IpmOptions, IpmStatus, LinearRow, QuadRow, SeparableObjective,
    SmoothConvexProgram,
};
use crate::error::{Error, Result};
use crate::model::{gain_matrix, transfer_from_gains, uplink_from_gains, CVector, ChannelSet, Direction, PowerModel};
use crate::rate::{dispersion, RateRegime};

/// One SCA iterate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaState {
    pub q: Vec<f64>,
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    pub phi_hat: Vec<f64>,
    pub theta: Vec<f64>,
    /// `a[k][j]` pairs user `k` with the `j`-th other user in index order.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub gamma_tilde: Vec<f64>,
    pub q_tilde: Vec<f64>,
}

/// Index of user `l` among the users other than `k`.
#[inline]
fn other(k: usize, l: usize) -> usize {
    if l < k {
        l
    } else {
        l - 1
    }
}

/// Column layout of the subproblem variables.
#[derive(Debug, Clone, Copy)]
pub struct Layout {
    pub k: usize,
}

impl Layout {
    pub fn dim(&self) -> usize {
        5 * self.k + 2 * self.k * (self.k - 1)
    }
    pub fn q(&self, k: usize) -> usize {
        k
    }
    pub fn phi(&self, k: usize) -> usize {
        self.k + k
    }
    pub fn psi(&self, k: usize) -> usize {
        2 * self.k + k
    }
    pub fn phi_hat(&self, k: usize) -> usize {
        3 * self.k + k
    }
    pub fn theta(&self, k: usize) -> usize {
        4 * self.k + k
    }
    pub fn a(&self, k: usize, l: usize) -> usize {
        5 * self.k + k * (self.k - 1) + other(k, l)
    }
    pub fn b(&self, k: usize, l: usize) -> usize {
        5 * self.k + self.k * (self.k - 1) + k * (self.k - 1) + other(k, l)
    }
}

impl ScaState {
    /// Exact point at uplink powers `q`: SINR surrogates equal the true SINRs.
    pub fn recover(q: &[f64], gains: &DMatrix<f64>, gamma_tilde: Vec<f64>, q_tilde: Vec<f64>) -> Self {
        let k = q.len();
        let gam = uplink_from_gains(gains, q);
        let psi: Vec<f64> = gam.iter().map(|&g| dispersion(g)).collect();
        let theta = psi.iter().map(|p| p.sqrt()).collect();
        let prod = |s: &[f64]| -> Vec<Vec<f64>> {
            (0..k)
                .map(|i| (0..k).filter(|&l| l != i).map(|l| s[i] * q[l]).collect())
                .collect()
        };
        ScaState {
            q: q.to_vec(),
            a: prod(&gam),
            b: prod(&gam),
            phi: gam.clone(),
            phi_hat: gam,
            psi,
            theta,
            gamma_tilde,
            q_tilde,
        }
    }

    pub fn to_vector(&self) -> DVector<f64> {
        let lay = Layout { k: self.q.len() };
        let mut x = DVector::zeros(lay.dim());
        for k in 0..lay.k {
            x[lay.q(k)] = self.q[k];
            x[lay.phi(k)] = self.phi[k];
            x[lay.psi(k)] = self.psi[k];
            x[lay.phi_hat(k)] = self.phi_hat[k];
            x[lay.theta(k)] = self.theta[k];
            for l in (0..lay.k).filter(|&l| l != k) {
                x[lay.a(k, l)] = self.a[k][other(k, l)];
                x[lay.b(k, l)] = self.b[k][other(k, l)];
            }
        }
        x
    }

    pub fn from_vector(x: &DVector<f64>, gamma_tilde: Vec<f64>, q_tilde: Vec<f64>) -> Self {
        let k = gamma_tilde.len();
        let lay = Layout { k };
        let pick = |f: &dyn Fn(usize) -> usize| (0..k).map(|i| x[f(i)]).collect::<Vec<_>>();
        let pairs = |f: &dyn Fn(usize, usize) -> usize| {
            (0..k)
                .map(|i| (0..k).filter(|&l| l != i).map(|l| x[f(i, l)]).collect())
                .collect()
        };
        ScaState {
            q: pick(&|i| lay.q(i)),
            phi: pick(&|i| lay.phi(i)),
            psi: pick(&|i| lay.psi(i)),
            phi_hat: pick(&|i| lay.phi_hat(i)),
            theta: pick(&|i| lay.theta(i)),
            a: pairs(&|i, l| lay.a(i, l)),
            b: pairs(&|i, l| lay.b(i, l)),
            gamma_tilde,
            q_tilde,
        }
    }
}

/// Energy-efficiency penalty `λ(ηΣq + N_tP_c + P₀)` for the subtractive form.
#[derive(Debug, Clone, Copy)]
pub struct Dinkelbach {
    pub lambda: f64,
    pub power: PowerModel,
    pub n_tx: usize,
}

/// Envelope boxes for `q_l` and for the SINR surrogates of each user.
#[derive(Debug, Clone, PartialEq)]
pub struct Boxes {
    pub q: Vec<(f64, f64)>,
    pub sinr: Vec<(f64, f64)>,
}

impl Boxes {
    /// `q_l ∈ [q̃_l, P]`, `φ_k, ϕ_k ∈ [ν₃, γ̃_k]`.
    pub fn full(state: &ScaState, nu3: f64, p_max: f64) -> Self {
        Boxes {
            q: state.q_tilde.iter().map(|&lo| (lo, p_max)).collect(),
            sinr: state.gamma_tilde.iter().map(|&hi| (nu3, hi)).collect(),
        }
    }

    /// Full boxes intersected with a relative radius around the current iterate.
    pub fn around(state: &ScaState, nu3: f64, p_max: f64, radius: f64) -> Self {
        let full = Self::full(state, nu3, p_max);
        let clip = |(lo, hi): (f64, f64), c: f64| {
            ((c * (1.0 - radius)).max(lo), (c * (1.0 + radius)).min(hi))
        };
        Boxes {
            q: full.q.iter().zip(&state.q).map(|(&b, &c)| clip(b, c)).collect(),
            sinr: full.sinr.iter().zip(&state.phi).map(|(&b, &c)| clip(b, c)).collect(),
        }
    }
}

/// Convex subproblem at the current linearization point with the full boxes.
#[allow(clippy::too_many_arguments)]
pub fn build_sca_subproblem(
    ch: &ChannelSet,
    w: &[CVector],
    state: &ScaState,
    regime: &RateRegime,
    p_max: f64,
    alpha: &[f64],
    dinkelbach: Option<&Dinkelbach>,
) -> Result<SmoothConvexProgram> {
    let boxes = Boxes::full(state, regime.nu3, p_max);
    build_with_boxes(&gain_matrix(ch, w), state, regime, p_max, alpha, dinkelbach, &boxes)
}

pub(crate) fn build_with_boxes(
    g: &DMatrix<f64>,
    state: &ScaState,
    regime: &RateRegime,
    p_max: f64,
    alpha: &[f64],
    dinkelbach: Option<&Dinkelbach>,
    boxes: &Boxes,
) -> Result<SmoothConvexProgram> {
    let k = state.q.len();
    let lay = Layout { k };
    let psi_lo = dispersion(regime.nu3);
    for (i, &p) in state.psi.iter().enumerate() {
        let hi = dispersion(state.gamma_tilde[i]);
        if !(p > 0.0 && p < 1.0) || p < psi_lo * (1.0 - 1e-9) || p > hi * (1.0 + 1e-9) {
            return Err(Error::Domain(format!(
                "dispersion point {p} of user {i} outside [{psi_lo}, {hi}]"
            )));
        }
    }

    let mut linear = Vec::new();
    let mut constant = 0.0;
    for i in 0..k {
        linear.push((lay.theta(i), -regime.vartheta * alpha[i]));
    }
    if let Some(d) = dinkelbach {
        for i in 0..k {
            linear.push((lay.q(i), -d.lambda * d.power.eta));
        }
        constant -= d.lambda * (d.n_tx as f64 * d.power.p_c + d.power.p_0);
    }
    let objective = SeparableObjective {
        log_terms: (0..k).map(|i| (lay.phi(i), alpha[i])).collect(),
        linear,
        constant,
    };
    let mut prog = SmoothConvexProgram::new(lay.dim(), Box::new(objective));

    for i in 0..k {
        prog.bounds[lay.q(i)] = boxes.q[i];
        prog.bounds[lay.phi(i)] = boxes.sinr[i];
        prog.bounds[lay.phi_hat(i)] = boxes.sinr[i];
        prog.bounds[lay.psi(i)] = (psi_lo, dispersion(state.gamma_tilde[i]));
        let pt = state.psi[i];
        let spt = pt.sqrt();
        let mu_max = 0.5 * spt + dispersion(state.gamma_tilde[i]) / (2.0 * spt);
        prog.bounds[lay.theta(i)] = (f64::NEG_INFINITY, mu_max + 1.0);
    }

    prog.linear_ineq.push(LinearRow {
        a: (0..k).map(|i| (lay.q(i), 1.0)).collect(),
        b: p_max,
    });

    for i in 0..k {
        let mut lower = vec![(lay.q(i), -g[(i, i)]), (lay.phi(i), 1.0)];
        let mut upper = vec![(lay.q(i), g[(i, i)]), (lay.phi_hat(i), -1.0)];
        for l in (0..k).filter(|&l| l != i) {
            lower.push((lay.a(i, l), g[(l, i)]));
            upper.push((lay.b(i, l), -g[(l, i)]));
        }
        prog.linear_ineq.push(LinearRow { a: lower, b: 0.0 });
        prog.linear_ineq.push(LinearRow { a: upper, b: 0.0 });

        let pt = state.psi[i];
        let den = (1.0 - pt) * (1.0 - pt);
        prog.quad_ineq.push(QuadRow {
            c: 1.0,
            d: vec![(lay.phi_hat(i), 1.0)],
            e: (1.0 - 2.0 * pt) / den,
            f: vec![(lay.psi(i), 1.0 / den)],
        });
        let spt = pt.sqrt();
        prog.linear_ineq.push(LinearRow {
            a: vec![(lay.psi(i), 0.5 / spt), (lay.theta(i), -1.0)],
            b: -0.5 * spt,
        });

        for l in (0..k).filter(|&l| l != i) {
            let (ql, qu) = boxes.q[l];
            let (fl, fu) = boxes.sinr[i];
            for (prod, s) in [(lay.a(i, l), lay.phi(i)), (lay.b(i, l), lay.phi_hat(i))] {
                let q = lay.q(l);
                prog.linear_ineq.push(LinearRow {
                    a: vec![(q, fl), (s, ql), (prod, -1.0)],
                    b: fl * ql,
                });
                prog.linear_ineq.push(LinearRow {
                    a: vec![(q, fu), (s, qu), (prod, -1.0)],
                    b: fu * qu,
                });
                prog.linear_ineq.push(LinearRow {
                    a: vec![(prod, 1.0), (q, -fu), (s, -ql)],
                    b: -fu * ql,
                });
                prog.linear_ineq.push(LinearRow {
                    a: vec![(prod, 1.0), (q, -fl), (s, -qu)],
                    b: -fl * qu,
                });
            }
        }
    }
    Ok(prog)
}

/// Moves every boxed variable a fraction `frac` toward the middle of its box.
pub(crate) fn interiorize(x: &mut DVector<f64>, prog: &SmoothConvexProgram, frac: f64) {
    for (i, &(lo, hi)) in prog.bounds.iter().enumerate() {
        if lo.is_finite() && hi.is_finite() {
            x[i] += frac * (0.5 * (lo + hi) - x[i]);
        }
    }
}

/// Everything the inner loop needs besides the iterate.
pub(crate) struct InnerProblem<'a> {
    pub gains: &'a DMatrix<f64>,
    pub regime: &'a RateRegime,
    pub p_max: f64,
    pub alpha: &'a [f64],
    pub dinkelbach: Option<Dinkelbach>,
    pub eps_conv: f64,
    pub max_inner: usize,
    pub ipm: IpmOptions,
}

impl InnerProblem<'_> {
    /// True objective at uplink powers `q`.
    pub fn value(&self, q: &[f64]) -> f64 {
        let (rates, cost) = self.parts(q);
        rates - cost
    }

    /// Weighted rate term and subtracted power cost.
    fn parts(&self, q: &[f64]) -> (f64, f64) {
        let gam = uplink_from_gains(self.gains, q);
        let rates: f64 = gam
            .iter()
            .zip(self.alpha)
            .map(|(&g, a)| a * self.regime.rate(g))
            .sum();
        let cost = self
            .dinkelbach
            .as_ref()
            .map_or(0.0, |d| d.lambda * d.power.consumed(q.iter().sum(), d.n_tx));
        (rates, cost)
    }

    fn admissible(&self, q: &[f64]) -> bool {
        let gam = uplink_from_gains(self.gains, q);
        let sum: f64 = q.iter().sum();
        sum <= self.p_max * (1.0 + 1e-12)
            && gam.iter().all(|&g| g >= self.regime.nu3 * (1.0 - 1e-10))
    }
}

/// Result of one run of the inner loop.
#[derive(Debug, Clone)]
pub(crate) struct InnerOutcome {
    pub state: ScaState,
    /// True objective after each accepted iterate, starting with the initial one.
    pub objectives: Vec<f64>,
    /// Subproblem solutions (before recovery) of the accepted steps.
    pub raw: Vec<ScaState>,
    pub solves: usize,
}

const FULL_RADIUS: f64 = f64::INFINITY;
const MIN_RADIUS: f64 = 1e-6;

/// Inner SCA loop at fixed receivers. Steps are accepted only if they keep
/// the QoS floor and do not lower the true objective; a poor match between
/// model gain and actual gain narrows the McCormick boxes around the iterate.
/// Stops once the model gain falls to `eps_conv` relative to the objective.
pub(crate) fn run_inner(prob: &InnerProblem, start: ScaState) -> InnerOutcome {
    let mut state = start;
    let mut current = prob.value(&state.q);
    let mut objectives = vec![current];
    let mut raw = Vec::new();
    let mut radius = FULL_RADIUS;
    let mut solves = 0;

    while solves < prob.max_inner {
        let boxes = if radius.is_infinite() {
            Boxes::full(&state, prob.regime.nu3, prob.p_max)
        } else {
            Boxes::around(&state, prob.regime.nu3, prob.p_max, radius)
        };
        let Ok(sub) = build_with_boxes(
            prob.gains,
            &state,
            prob.regime,
            prob.p_max,
            prob.alpha,
            prob.dinkelbach.as_ref(),
            &boxes,
        ) else {
            break;
        };
        let mut x0 = state.to_vector();
        interiorize(&mut x0, &sub, 1e-6);
        let report = solve_ipm_with(&sub, &x0, &prob.ipm);
        solves += 1;
        if report.status == IpmStatus::Infeasible {
            radius = shrink(radius);
            if radius < MIN_RADIUS {
                break;
            }
            continue;
        }
        let sol = ScaState::from_vector(&report.x_star, state.gamma_tilde.clone(), state.q_tilde.clone());
        let scale = gain_scale(prob, &state.q);
        let predicted = report.obj - current;
        if predicted <= prob.eps_conv * scale {
            break;
        }
        let next_value = prob.value(&sol.q);
        let actual = next_value - current;
        let admissible = prob.admissible(&sol.q);
        if admissible && actual >= 0.0 {
            state = ScaState::recover(&sol.q, prob.gains, state.gamma_tilde.clone(), state.q_tilde.clone());
            raw.push(sol);
            current = next_value;
            objectives.push(current);
        }
        let ratio = if admissible { actual / predicted } else { -1.0 };
        if ratio < 0.25 {
            radius = shrink(radius);
            if radius < MIN_RADIUS {
                break;
            }
        } else if ratio > 0.75 && radius.is_finite() {
            radius *= 2.0;
            if radius > 4.0 {
                radius = FULL_RADIUS;
            }
        }
    }
    InnerOutcome {
        state,
        objectives,
        raw,
        solves,
    }
}

fn gain_scale(prob: &InnerProblem, q: &[f64]) -> f64 {
    let (rates, cost) = prob.parts(q);
    rates.abs().max(cost.abs()).max(1e-12)
}

fn shrink(radius: f64) -> f64 {
    if radius.is_infinite() {
        0.5
    } else {
        radius * 0.25
    }
}

/// Minimal uplink powers for `ν₃` at the given receivers, or the current
/// powers if the linear solve breaks down.
pub(crate) fn min_powers_for(gains: &DMatrix<f64>, nu3: f64, fallback: &[f64]) -> Vec<f64> {
    let k = fallback.len();
    match transfer_from_gains(gains, &vec![nu3; k], Direction::Uplink) {
        Ok(q) => q.iter().zip(fallback).map(|(&a, &b)| a.min(b)).collect(),
        Err(_) => fallback.to_vec(),
    }
}
