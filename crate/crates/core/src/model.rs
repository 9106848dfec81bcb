//! Multiuser downlink channel model, SINR evaluation, receivers and the
//! uplink/downlink power transfer.
//!
//! Channels are noise-normalized (`h̄_k = h_k/σ_k`), so every SINR has a unit
//! noise term. Beamformers are unit-norm columns; powers carry the scale.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rate::RateRegime;

pub type CVector = DVector<Complex64>;

/// Cell geometry for channel sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Geometry {
    /// Reference distance `d₀` in metres.
    pub d0: f64,
    /// Cell radius in metres.
    pub radius: f64,
    /// Pathloss exponent.
    pub exponent: f64,
    /// Noise variance shared by all users.
    pub sigma2: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry {
            d0: 50.0,
            radius: 300.0,
            exponent: 3.0,
            sigma2: 1.0,
        }
    }
}

impl Geometry {
    pub fn pathloss(&self, d: f64) -> f64 {
        1.0 / (1.0 + (d / self.d0).powf(self.exponent))
    }
}

/// One random problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChannelSetRepr", into = "ChannelSetRepr")]
pub struct ChannelSet {
    pub k_users: usize,
    pub n_tx: usize,
    pub h: Vec<CVector>,
    pub sigma2: Vec<f64>,
    pub h_bar: Vec<CVector>,
    pub d: Vec<f64>,
    pub rho: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ChannelSetRepr {
    k_users: usize,
    n_tx: usize,
    h: Vec<Vec<[f64; 2]>>,
    sigma2: Vec<f64>,
    d: Vec<f64>,
    rho: Vec<f64>,
}

pub(crate) fn to_pairs(v: &CVector) -> Vec<[f64; 2]> {
    v.iter().map(|c| [c.re, c.im]).collect()
}

pub(crate) fn from_pairs(v: &[[f64; 2]]) -> CVector {
    CVector::from_iterator(v.len(), v.iter().map(|p| Complex64::new(p[0], p[1])))
}

impl From<ChannelSet> for ChannelSetRepr {
    fn from(c: ChannelSet) -> Self {
        ChannelSetRepr {
            k_users: c.k_users,
            n_tx: c.n_tx,
            h: c.h.iter().map(to_pairs).collect(),
            sigma2: c.sigma2,
            d: c.d,
            rho: c.rho,
        }
    }
}

impl TryFrom<ChannelSetRepr> for ChannelSet {
    type Error = Error;

    fn try_from(r: ChannelSetRepr) -> Result<Self> {
        let h: Vec<CVector> = r.h.iter().map(|v| from_pairs(v)).collect();
        ChannelSet::new(h, r.sigma2, r.d, r.rho)
    }
}

impl ChannelSet {
    /// Builds an instance from raw channels and noise variances.
    pub fn new(h: Vec<CVector>, sigma2: Vec<f64>, d: Vec<f64>, rho: Vec<f64>) -> Result<Self> {
        let k = h.len();
        if k == 0 {
            return Err(Error::Shape("at least one user is required".into()));
        }
        let n_tx = h[0].len();
        if h.iter().any(|v| v.len() != n_tx) {
            return Err(Error::Shape("channel vectors differ in length".into()));
        }
        if sigma2.len() != k || d.len() != k || rho.len() != k {
            return Err(Error::Shape("per-user vectors must have K entries".into()));
        }
        if k > n_tx {
            return Err(Error::Config(format!("K = {k} exceeds N_t = {n_tx}")));
        }
        if sigma2.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::Domain("noise variances must be positive".into()));
        }
        let h_bar = h
            .iter()
            .zip(&sigma2)
            .map(|(v, s)| v.unscale(s.sqrt()))
            .collect();
        Ok(ChannelSet {
            k_users: k,
            n_tx,
            h,
            sigma2,
            h_bar,
            d,
            rho,
        })
    }

    /// Unit-noise instance from normalized channels, with placeholder geometry.
    pub fn from_normalized(h_bar: Vec<CVector>) -> Result<Self> {
        let k = h_bar.len();
        ChannelSet::new(h_bar, vec![1.0; k], vec![0.0; k], vec![1.0; k])
    }

    /// `‖h̄_k‖²`.
    pub fn gain(&self, k: usize) -> f64 {
        self.h_bar[k].norm_squared()
    }

    /// Single-user SINR caps `γ̃_k = P‖h̄_k‖²`.
    pub fn sinr_caps(&self, p_max: f64) -> Vec<f64> {
        (0..self.k_users).map(|k| p_max * self.gain(k)).collect()
    }
}

/// Draws a Rayleigh-faded instance with users dropped uniformly in distance.
///
/// Users are drawn one after another from the same stream, so an instance with
/// `K` users is a prefix of the one with `K+1` users for the same seed.
pub fn sample_channels(geom: &Geometry, k_users: usize, n_tx: usize, seed: u64) -> Result<ChannelSet> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    sample_channels_with(geom, k_users, n_tx, &mut rng)
}

/// [`sample_channels`] drawing from a caller-provided generator.
pub fn sample_channels_with<R: Rng>(
    geom: &Geometry,
    k_users: usize,
    n_tx: usize,
    rng: &mut R,
) -> Result<ChannelSet> {
    if k_users == 0 || k_users > n_tx {
        return Err(Error::Config(format!(
            "need 1 <= K <= N_t, got K = {k_users}, N_t = {n_tx}"
        )));
    }
    if !(geom.d0 > 0.0 && geom.radius > geom.d0 && geom.sigma2 > 0.0) {
        return Err(Error::Config("geometry needs 0 < d0 < radius, sigma2 > 0".into()));
    }
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let mut h = Vec::with_capacity(k_users);
    let mut d = Vec::with_capacity(k_users);
    let mut rho = Vec::with_capacity(k_users);
    for _ in 0..k_users {
        let dk = rng.gen_range(geom.d0..=geom.radius);
        let rk = geom.pathloss(dk);
        let amp = rk.sqrt() * scale;
        let v = CVector::from_fn(n_tx, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(amp * re, amp * im)
        });
        h.push(v);
        d.push(dk);
        rho.push(rk);
    }
    ChannelSet::new(h, vec![geom.sigma2; k_users], d, rho)
}

fn check_shapes(ch: &ChannelSet, w: &[CVector], p: &[f64]) -> Result<()> {
    if w.len() != ch.k_users || p.len() != ch.k_users {
        return Err(Error::Shape(format!(
            "expected {} beamformers and powers, got {} and {}",
            ch.k_users,
            w.len(),
            p.len()
        )));
    }
    if w.iter().any(|v| v.len() != ch.n_tx) {
        return Err(Error::Shape("beamformer length differs from N_t".into()));
    }
    Ok(())
}

/// `G[(l, k)] = |h̄_lᴴ w_k|²`.
pub fn gain_matrix(ch: &ChannelSet, w: &[CVector]) -> DMatrix<f64> {
    let k = ch.k_users;
    DMatrix::from_fn(k, k, |l, j| ch.h_bar[l].dotc(&w[j]).norm_sqr())
}

pub(crate) fn downlink_from_gains(g: &DMatrix<f64>, p: &[f64]) -> Vec<f64> {
    let k = p.len();
    (0..k)
        .map(|i| {
            let interf: f64 = (0..k).filter(|&l| l != i).map(|l| p[l] * g[(i, l)]).sum();
            p[i] * g[(i, i)] / (interf + 1.0)
        })
        .collect()
}

pub(crate) fn uplink_from_gains(g: &DMatrix<f64>, q: &[f64]) -> Vec<f64> {
    let k = q.len();
    (0..k)
        .map(|i| {
            let interf: f64 = (0..k).filter(|&l| l != i).map(|l| q[l] * g[(l, i)]).sum();
            q[i] * g[(i, i)] / (interf + 1.0)
        })
        .collect()
}

/// Downlink SINRs `p_k|h̄_kᴴw_k|² / (Σ_{l≠k} p_l|h̄_kᴴw_l|² + 1)`.
pub fn downlink_sinr(ch: &ChannelSet, w: &[CVector], p: &[f64]) -> Result<Vec<f64>> {
    check_shapes(ch, w, p)?;
    Ok(downlink_from_gains(&gain_matrix(ch, w), p))
}

/// Dual uplink SINRs `q_k|h̄_kᴴw_k|² / (Σ_{l≠k} q_l|h̄_lᴴw_k|² + 1)`.
pub fn uplink_sinr(ch: &ChannelSet, w: &[CVector], q: &[f64]) -> Result<Vec<f64>> {
    check_shapes(ch, w, q)?;
    Ok(uplink_from_gains(&gain_matrix(ch, w), q))
}

/// Rotates `w` so that `h̄ᴴw` is real and nonnegative.
fn fix_phase(h: &CVector, w: &mut CVector) {
    let c = h.dotc(w);
    if c.norm() > 0.0 {
        let rot = c.conj() / c.norm();
        for x in w.iter_mut() {
            *x *= rot;
        }
    }
}

/// MMSE receivers `(I + Σ q_l h̄_l h̄_lᴴ)⁻¹ h̄_k`, unit-normalized.
pub fn mmse_beamformers(ch: &ChannelSet, q: &[f64]) -> Result<Vec<CVector>> {
    if q.len() != ch.k_users {
        return Err(Error::Shape("power vector length differs from K".into()));
    }
    if q.iter().any(|x| !(*x >= 0.0)) {
        return Err(Error::Domain("uplink powers must be nonnegative".into()));
    }
    let n = ch.n_tx;
    let mut a = DMatrix::<Complex64>::identity(n, n);
    for (hk, &qk) in ch.h_bar.iter().zip(q) {
        if qk > 0.0 {
            a.ger(Complex64::new(qk, 0.0), hk, &hk.map(|c| c.conj()), Complex64::new(1.0, 0.0));
        }
    }
    let chol = a
        .cholesky()
        .ok_or_else(|| Error::Numeric("MMSE covariance is not positive definite".into()))?;
    Ok(ch
        .h_bar
        .iter()
        .map(|hk| {
            let mut w = chol.solve(hk);
            let nrm = w.norm();
            w.unscale_mut(nrm);
            fix_phase(hk, &mut w);
            w
        })
        .collect())
}

/// Link direction for [`duality_transfer`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Downlink,
    Uplink,
}

/// Powers meeting `targets` exactly for fixed beamformers, from `Ψp = 1`.
///
/// `Ψ` has `|h̄_kᴴw_k|²/γ_k` on the diagonal and the negated cross gains of the
/// chosen direction off it. Nonpositive solutions mean the targets are out of
/// reach for these beamformers.
pub fn duality_transfer(
    ch: &ChannelSet,
    w: &[CVector],
    targets: &[f64],
    direction: Direction,
) -> Result<Vec<f64>> {
    check_shapes(ch, w, targets)?;
    if targets.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::Domain("SINR targets must be positive".into()));
    }
    let g = gain_matrix(ch, w);
    transfer_from_gains(&g, targets, direction)
}

pub(crate) fn transfer_from_gains(
    g: &DMatrix<f64>,
    targets: &[f64],
    direction: Direction,
) -> Result<Vec<f64>> {
    let k = targets.len();
    let psi = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            g[(i, i)] / targets[i]
        } else {
            match direction {
                Direction::Downlink => -g[(i, j)],
                Direction::Uplink => -g[(j, i)],
            }
        }
    });
    let sol = psi
        .lu()
        .solve(&DVector::from_element(k, 1.0))
        .ok_or(Error::Infeasible {
            required_power: f64::INFINITY,
            budget: f64::NAN,
        })?;
    if sol.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::Infeasible {
            required_power: f64::INFINITY,
            budget: f64::NAN,
        });
    }
    Ok(sol.iter().cloned().collect())
}

/// Zero-forcing beamformers from the pseudo-inverse of the stacked channels.
pub fn zf_beamformers(ch: &ChannelSet) -> Result<Vec<CVector>> {
    let k = ch.k_users;
    let hh = DMatrix::from_fn(k, ch.n_tx, |i, j| ch.h_bar[i][j].conj());
    let svd = hh.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-10 * smax) {
        return Err(Error::Degenerate("channel matrix is rank deficient".into()));
    }
    let pinv = svd
        .pseudo_inverse(0.0)
        .map_err(|e| Error::Numeric(e.to_string()))?;
    Ok((0..k)
        .map(|j| {
            let mut w: CVector = pinv.column(j).into_owned();
            let nrm = w.norm();
            w.unscale_mut(nrm);
            fix_phase(&ch.h_bar[j], &mut w);
            w
        })
        .collect())
}

/// Outcome of an optimizer run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Converged,
    MaxIter,
    Infeasible,
}

/// Beamformers, powers and the resulting per-user link quality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BeamSolutionRepr", into = "BeamSolutionRepr")]
pub struct BeamSolution {
    pub w: Vec<CVector>,
    pub p: Vec<f64>,
    pub gamma: Vec<f64>,
    pub rates: Vec<f64>,
    pub objective: f64,
    pub status: SolveStatus,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    /// Objective after each accepted iterate.
    pub trace: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct BeamSolutionRepr {
    w: Vec<Vec<[f64; 2]>>,
    p: Vec<f64>,
    gamma: Vec<f64>,
    rates: Vec<f64>,
    objective: f64,
    status: SolveStatus,
    outer_iterations: usize,
    inner_iterations: usize,
    #[serde(default)]
    trace: Vec<f64>,
}

impl From<BeamSolution> for BeamSolutionRepr {
    fn from(s: BeamSolution) -> Self {
        BeamSolutionRepr {
            w: s.w.iter().map(to_pairs).collect(),
            p: s.p,
            gamma: s.gamma,
            rates: s.rates,
            objective: s.objective,
            status: s.status,
            outer_iterations: s.outer_iterations,
            inner_iterations: s.inner_iterations,
            trace: s.trace,
        }
    }
}

impl TryFrom<BeamSolutionRepr> for BeamSolution {
    type Error = Error;

    fn try_from(r: BeamSolutionRepr) -> Result<Self> {
        let k = r.w.len();
        if [r.p.len(), r.gamma.len(), r.rates.len()].iter().any(|&n| n != k) {
            return Err(Error::Shape("solution vectors must have K entries".into()));
        }
        Ok(BeamSolution {
            w: r.w.iter().map(|v| from_pairs(v)).collect(),
            p: r.p,
            gamma: r.gamma,
            rates: r.rates,
            objective: r.objective,
            status: r.status,
            outer_iterations: r.outer_iterations,
            inner_iterations: r.inner_iterations,
            trace: r.trace,
        })
    }
}

impl BeamSolution {
    pub fn sum_rate(&self) -> f64 {
        self.rates.iter().sum()
    }

    pub fn total_power(&self) -> f64 {
        self.p.iter().sum()
    }

    pub fn min_rate(&self) -> f64 {
        self.rates.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Per-user SINRs and rates for a downlink design; the objective is the sum rate.
///
/// `relu_clamp` floors rates at zero, as done for the zero-forcing baseline.
pub fn evaluate(
    ch: &ChannelSet,
    w: &[CVector],
    p: &[f64],
    regime: &RateRegime,
    relu_clamp: bool,
) -> Result<BeamSolution> {
    let gamma = downlink_sinr(ch, w, p)?;
    let rates: Vec<f64> = gamma
        .iter()
        .map(|&g| {
            let r = regime.rate(g);
            if relu_clamp {
                r.max(0.0)
            } else {
                r
            }
        })
        .collect();
    Ok(BeamSolution {
        w: w.to_vec(),
        p: p.to_vec(),
        objective: rates.iter().sum(),
        gamma,
        rates,
        status: SolveStatus::Converged,
        outer_iterations: 0,
        inner_iterations: 0,
        trace: Vec::new(),
    })
}

/// Circuit and amplifier power model for energy efficiency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PowerModel {
    /// Amplifier inefficiency, at least one.
    pub eta: f64,
    /// Circuit power per transmit antenna, watts.
    pub p_c: f64,
    /// Static power, watts.
    pub p_0: f64,
}

impl Default for PowerModel {
    fn default() -> Self {
        PowerModel {
            eta: 1.0,
            p_c: dbm_to_watts(30.0),
            p_0: dbm_to_watts(40.0),
        }
    }
}

impl PowerModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta >= 1.0 && self.p_c >= 0.0 && self.p_0 >= 0.0) {
            return Err(Error::Config("power model needs eta >= 1 and P_c, P_0 >= 0".into()));
        }
        Ok(())
    }

    /// Total consumed power for transmit power `tx` on `n_tx` antennas.
    pub fn consumed(&self, tx: f64, n_tx: usize) -> f64 {
        self.eta * tx + n_tx as f64 * self.p_c + self.p_0
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Transmit budget from SNR in dB: `P = 10^{SNR/10}·σ²`.
pub fn snr_db_to_power(snr_db: f64, sigma2: f64) -> f64 {
    10f64.powf(snr_db / 10.0) * sigma2
}
