//! Fixed-point power control: minimal power for common SINR targets and the
//! max-min SINR level under a sum-power budget.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{
    gain_matrix, mmse_beamformers, transfer_from_gains, uplink_from_gains, CVector, ChannelSet,
    Direction,
};

/// Divergence cap relative to the budget.
const GROWTH_CAP: f64 = 1e6;

/// Minimal uplink powers together with their MMSE receivers.
#[derive(Debug, Clone, PartialEq)]
pub struct MinPower {
    pub w: Vec<CVector>,
    pub q: Vec<f64>,
    pub iterations: usize,
}

impl MinPower {
    pub fn total(&self) -> f64 {
        self.q.iter().sum()
    }
}

/// Alternates MMSE receivers and the power update `q_k ← q_k·target/γ_k`.
///
/// Infeasibility shows up as unbounded growth; it is reported once the sum
/// power passes `10⁶·p_max` or the iteration budget runs out.
pub fn min_power_fixed_point(
    ch: &ChannelSet,
    target: f64,
    p_max: f64,
    tol: f64,
    max_iter: usize,
) -> Result<MinPower> {
    if !(target > 0.0) {
        return Err(Error::Domain(format!("SINR target must be positive, got {target}")));
    }
    let k = ch.k_users;
    let diverged = |sum: f64| Error::Infeasible {
        required_power: sum,
        budget: p_max,
    };
    let mut q: Vec<f64> = (0..k).map(|i| target / ch.gain(i)).collect();
    for it in 1..=max_iter {
        let w = mmse_beamformers(ch, &q)?;
        let g = gain_matrix(ch, &w);
        let gam = uplink_from_gains(&g, &q);
        let next: Vec<f64> = q.iter().zip(&gam).map(|(qi, gi)| qi * target / gi).collect();
        let change = q
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs() / b)
            .fold(0.0, f64::max);
        q = next;
        let sum: f64 = q.iter().sum();
        if !sum.is_finite() || sum > GROWTH_CAP * p_max {
            return Err(diverged(f64::INFINITY));
        }
        if change < tol {
            let w = mmse_beamformers(ch, &q)?;
            let g = gain_matrix(ch, &w);
            let exact = transfer_from_gains(&g, &vec![target; k], Direction::Uplink)
                .map_err(|_| diverged(sum))?;
            return Ok(MinPower {
                w,
                q: exact,
                iterations: it,
            });
        }
    }
    Err(diverged(q.iter().sum()))
}

/// Minimal uplink powers giving every user SINR `mu` with fixed receivers.
///
/// Runs the standard interference iteration from zero. The sequence grows
/// monotonically, so crossing the budget settles infeasibility early.
pub fn maxmin_feasible(ch: &ChannelSet, w: &[CVector], mu: f64, p_max: f64) -> Result<Vec<f64>> {
    if w.len() != ch.k_users {
        return Err(Error::Shape("one beamformer per user is required".into()));
    }
    maxmin_feasible_gains(&gain_matrix(ch, w), mu, p_max)
}

pub(crate) fn maxmin_feasible_gains(g: &DMatrix<f64>, mu: f64, p_max: f64) -> Result<Vec<f64>> {
    if !(mu > 0.0) {
        return Err(Error::Domain(format!("SINR level must be positive, got {mu}")));
    }
    let k = g.nrows();
    let over = |sum: f64| Error::Infeasible {
        required_power: sum,
        budget: p_max,
    };
    let mut q = vec![0.0; k];
    let mut converged = false;
    for _ in 0..100_000 {
        let next: Vec<f64> = (0..k)
            .map(|i| {
                let interf: f64 = (0..k).filter(|&l| l != i).map(|l| q[l] * g[(l, i)]).sum();
                mu * (interf + 1.0) / g[(i, i)]
            })
            .collect();
        let change = q
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs() / b)
            .fold(0.0, f64::max);
        q = next;
        let sum: f64 = q.iter().sum();
        if sum > p_max * (1.0 + 1e-12) {
            return Err(over(sum));
        }
        if change < 1e-13 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(over(q.iter().sum()));
    }
    // Solve the fixed-point equations exactly for a clean SINR residual.
    let exact = transfer_from_gains(g, &vec![mu; k], Direction::Uplink).unwrap_or(q);
    let sum: f64 = exact.iter().sum();
    if sum > p_max * (1.0 + 1e-12) {
        return Err(over(sum));
    }
    Ok(exact)
}

/// Largest common uplink SINR reachable within `p_max`, by bisection on the level.
pub fn bisect_maxmin(
    ch: &ChannelSet,
    w: &[CVector],
    p_max: f64,
    mu_lo: f64,
    mu_hi: f64,
    tol: f64,
) -> Result<(f64, Vec<f64>)> {
    let g = gain_matrix(ch, w);
    bisect_maxmin_gains(&g, p_max, mu_lo, mu_hi, tol)
}

pub(crate) fn bisect_maxmin_gains(
    g: &DMatrix<f64>,
    p_max: f64,
    mu_lo: f64,
    mu_hi: f64,
    tol: f64,
) -> Result<(f64, Vec<f64>)> {
    let mut q_lo = maxmin_feasible_gains(g, mu_lo, p_max)
        .map_err(|_| Error::Config(format!("lower bracket {mu_lo} is infeasible")))?;
    if let Ok(q) = maxmin_feasible_gains(g, mu_hi, p_max) {
        return Ok((mu_hi, q));
    }
    let (mut lo, mut hi) = (mu_lo, mu_hi);
    while hi - lo > tol * lo {
        let mid = 0.5 * (lo + hi);
        match maxmin_feasible_gains(g, mid, p_max) {
            Ok(q) => {
                lo = mid;
                q_lo = q;
            }
            Err(_) => hi = mid,
        }
    }
    Ok((lo, q_lo))
}
