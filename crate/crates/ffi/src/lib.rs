//! C interface to the `urllc` library.
//!
//! Every fallible call returns a [`UrllcStatus`] and writes its result
//! through an out-pointer. On failure a message is available from
//! [`urllc_last_error_message`] on the same thread. Objects cross the
//! boundary as opaque handles that the caller releases with the matching
//! `_free` function.

use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::slice;

use nalgebra::DVector;
use num_complex::Complex64;

use urllc::algorithms::{eemax, initialize, maxmin, srmax, zfbf_baseline, SolveOptions};
use urllc::harness::{run_monte_carlo, ExperimentConfig};
use urllc::model::{evaluate, sample_channels, BeamSolution, ChannelSet, Geometry, PowerModel};
use urllc::rate::{self, make_regime, RateRegime};

mod error;

pub use error::{urllc_last_error_message, UrllcStatus};
use error::{guard, invalid, null, Fail};

/// Reliability regime built from `(ε, n, D)`.
pub struct UrllcRegime(RateRegime);

/// Channel realization of `K` users on `N_t` antennas.
pub struct UrllcChannels(ChannelSet);

/// Optimized downlink design.
pub struct UrllcSolution {
    inner: BeamSolution,
    meets_targets: bool,
}

/// SINR thresholds and derived quantities of a regime.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct UrllcThresholds {
    pub vartheta: f64,
    /// Payload rate in nats per channel use.
    pub r_min: f64,
    pub nu0: f64,
    pub nu2: f64,
    pub nu3: f64,
    pub nu4: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UrllcObjective {
    SumRate = 0,
    EnergyEfficiency = 1,
    MaxMin = 2,
    ZeroForcing = 3,
    MinPower = 4,
}

fn out<'a, T>(ptr: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    // SAFETY: callers document that non-null out-pointers are writable.
    unsafe { ptr.as_mut() }.ok_or_else(|| null(what))
}

fn put<T>(dst: *mut *mut T, value: T) -> Result<(), Fail> {
    *out(dst, "out")? = Box::into_raw(Box::new(value));
    Ok(())
}

fn handle<'a, T>(ptr: *const T, what: &str) -> Result<&'a T, Fail> {
    // SAFETY: callers pass handles obtained from this library.
    unsafe { ptr.as_ref() }.ok_or_else(|| null(what))
}

fn copy_out(values: &[f64], buf: *mut f64, len: usize) -> Result<(), Fail> {
    if buf.is_null() {
        return Err(null("buffer"));
    }
    if len < values.len() {
        return Err(invalid(format!("buffer holds {len} values, need {}", values.len())));
    }
    // SAFETY: `buf` is non-null and the caller guarantees `len` writable slots.
    unsafe { slice::from_raw_parts_mut(buf, values.len()) }.copy_from_slice(values);
    Ok(())
}

fn into_c_string(s: String) -> Result<*mut c_char, Fail> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|e| Fail(UrllcStatus::Serialization, e.to_string()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn urllc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or a pointer returned by this library that has not been
/// freed yet.
#[no_mangle]
pub unsafe extern "C" fn urllc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Finite-blocklength rate `R(γ)` in nats per channel use.
///
/// # Safety
/// `out_rate` must be a valid pointer to writable memory.
#[no_mangle]
pub unsafe extern "C" fn urllc_rate(gamma: f64, vartheta: f64, out_rate: *mut f64) -> UrllcStatus {
    guard(|| {
        *out(out_rate, "out_rate")? = rate::rate(gamma, vartheta)?;
        Ok(())
    })
}

/// Largest SINR `γ` solving `R(γ) = α`.
///
/// # Safety
/// `out_gamma` must be a valid pointer to writable memory.
#[no_mangle]
pub unsafe extern "C" fn urllc_solve_rate_eq(alpha: f64, vartheta: f64, out_gamma: *mut f64) -> UrllcStatus {
    guard(|| {
        *out(out_gamma, "out_gamma")? = rate::solve_rate_eq_bisect(alpha, vartheta)?;
        Ok(())
    })
}

/// Builds a regime for error probability `epsilon`, blocklength `n` and
/// payload `d_bits`. With `shannon` set, the dispersion penalty is dropped.
///
/// # Safety
/// `out_regime` must be a valid pointer to writable memory.
#[no_mangle]
pub unsafe extern "C" fn urllc_regime_new(
    epsilon: f64,
    n: u32,
    d_bits: u32,
    shannon: bool,
    out_regime: *mut *mut UrllcRegime,
) -> UrllcStatus {
    guard(|| put(out_regime, UrllcRegime(make_regime(epsilon, n, d_bits, shannon)?)))
}

/// # Safety
/// `regime` must be a live handle and `out_thresholds` writable.
#[no_mangle]
pub unsafe extern "C" fn urllc_regime_thresholds(
    regime: *const UrllcRegime,
    out_thresholds: *mut UrllcThresholds,
) -> UrllcStatus {
    guard(|| {
        let r = &handle(regime, "regime")?.0;
        *out(out_thresholds, "out_thresholds")? = UrllcThresholds {
            vartheta: r.vartheta,
            r_min: r.r_min,
            nu0: r.nu0,
            nu2: r.nu2,
            nu3: r.nu3,
            nu4: r.nu4,
        };
        Ok(())
    })
}

/// # Safety
/// `regime` must be null or a handle from [`urllc_regime_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn urllc_regime_free(regime: *mut UrllcRegime) {
    if !regime.is_null() {
        drop(Box::from_raw(regime));
    }
}

/// Draws users uniformly in the default cell with Rayleigh fading.
///
/// # Safety
/// `out_channels` must be a valid pointer to writable memory.
#[no_mangle]
pub unsafe extern "C" fn urllc_channels_sample(
    k_users: usize,
    n_tx: usize,
    seed: u64,
    out_channels: *mut *mut UrllcChannels,
) -> UrllcStatus {
    guard(|| {
        let ch = sample_channels(&Geometry::default(), k_users, n_tx, seed)?;
        put(out_channels, UrllcChannels(ch))
    })
}

/// Builds channels from noise-normalized vectors given as separate real and
/// imaginary arrays, user-major: entry `(k, i)` sits at `k * n_tx + i`.
///
/// # Safety
/// `re` and `im` must each point to `k_users * n_tx` readable values and
/// `out_channels` must be writable.
#[no_mangle]
pub unsafe extern "C" fn urllc_channels_from_normalized(
    k_users: usize,
    n_tx: usize,
    re: *const f64,
    im: *const f64,
    out_channels: *mut *mut UrllcChannels,
) -> UrllcStatus {
    guard(|| {
        if re.is_null() || im.is_null() {
            return Err(null("channel array"));
        }
        let len = k_users
            .checked_mul(n_tx)
            .filter(|&l| l > 0)
            .ok_or_else(|| invalid("channel dimensions must be positive"))?;
        let re = slice::from_raw_parts(re, len);
        let im = slice::from_raw_parts(im, len);
        let h_bar = (0..k_users)
            .map(|k| {
                DVector::from_iterator(
                    n_tx,
                    (0..n_tx).map(|i| Complex64::new(re[k * n_tx + i], im[k * n_tx + i])),
                )
            })
            .collect();
        put(out_channels, UrllcChannels(ChannelSet::from_normalized(h_bar)?))
    })
}

/// # Safety
/// `channels` must be a live handle; the out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn urllc_channels_dims(
    channels: *const UrllcChannels,
    out_k_users: *mut usize,
    out_n_tx: *mut usize,
) -> UrllcStatus {
    guard(|| {
        let ch = &handle(channels, "channels")?.0;
        *out(out_k_users, "out_k_users")? = ch.k_users;
        *out(out_n_tx, "out_n_tx")? = ch.n_tx;
        Ok(())
    })
}

/// # Safety
/// `channels` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn urllc_channels_free(channels: *mut UrllcChannels) {
    if !channels.is_null() {
        drop(Box::from_raw(channels));
    }
}

/// Runs one optimizer with default options and unit user weights split
/// evenly. Returns [`UrllcStatus::Infeasible`] when the SINR thresholds
/// cannot be met within `p_max`; the zero-forcing baseline always succeeds
/// and reports whether it met them via [`urllc_solution_meets_targets`].
///
/// # Safety
/// `channels` and `regime` must be live handles and `out_solution` writable.
#[no_mangle]
pub unsafe extern "C" fn urllc_solve(
    channels: *const UrllcChannels,
    regime: *const UrllcRegime,
    p_max: f64,
    objective: UrllcObjective,
    out_solution: *mut *mut UrllcSolution,
) -> UrllcStatus {
    guard(|| {
        let ch = &handle(channels, "channels")?.0;
        let r = &handle(regime, "regime")?.0;
        if !(p_max > 0.0 && p_max.is_finite()) {
            return Err(invalid(format!("p_max must be positive, got {p_max}")));
        }
        let opts = SolveOptions::default();
        let (inner, meets_targets) = match objective {
            UrllcObjective::SumRate => (srmax(ch, r, p_max, &opts)?, true),
            UrllcObjective::EnergyEfficiency => (eemax(ch, r, p_max, &PowerModel::default(), &opts)?, true),
            UrllcObjective::MaxMin => (maxmin(ch, r, p_max, &opts)?, true),
            UrllcObjective::ZeroForcing => {
                let z = zfbf_baseline(ch, r, p_max)?;
                (z.solution, z.feasible)
            }
            UrllcObjective::MinPower => {
                let init = initialize(ch, r, p_max)?;
                let mut s = evaluate(ch, &init.w, &init.p, r, false)?;
                s.objective = s.total_power();
                (s, true)
            }
        };
        put(out_solution, UrllcSolution { inner, meets_targets })
    })
}

/// # Safety
/// `solution` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn urllc_solution_users(solution: *const UrllcSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.inner.p.len())
}

/// Objective value; `NaN` for a null handle.
///
/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn urllc_solution_objective(solution: *const UrllcSolution) -> f64 {
    solution.as_ref().map_or(f64::NAN, |s| s.inner.objective)
}

/// Whether every user reaches the regime's SINR threshold.
///
/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn urllc_solution_meets_targets(solution: *const UrllcSolution) -> bool {
    solution.as_ref().is_some_and(|s| s.meets_targets)
}

/// Copies the per-user downlink powers into `buf`.
///
/// # Safety
/// `solution` must be a live handle and `buf` must hold `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn urllc_solution_powers(
    solution: *const UrllcSolution,
    buf: *mut f64,
    len: usize,
) -> UrllcStatus {
    guard(|| copy_out(&handle(solution, "solution")?.inner.p, buf, len))
}

/// Copies the per-user SINRs into `buf`.
///
/// # Safety
/// `solution` must be a live handle and `buf` must hold `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn urllc_solution_sinrs(
    solution: *const UrllcSolution,
    buf: *mut f64,
    len: usize,
) -> UrllcStatus {
    guard(|| copy_out(&handle(solution, "solution")?.inner.gamma, buf, len))
}

/// Copies the per-user rates into `buf`.
///
/// # Safety
/// `solution` must be a live handle and `buf` must hold `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn urllc_solution_rates(
    solution: *const UrllcSolution,
    buf: *mut f64,
    len: usize,
) -> UrllcStatus {
    guard(|| copy_out(&handle(solution, "solution")?.inner.rates, buf, len))
}

/// Full solution, beamformers included, as a JSON string to be released
/// with [`urllc_string_free`].
///
/// # Safety
/// `solution` must be a live handle and `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn urllc_solution_to_json(
    solution: *const UrllcSolution,
    out_json: *mut *mut c_char,
) -> UrllcStatus {
    guard(|| {
        let s = handle(solution, "solution")?;
        let text = serde_json::to_string(&s.inner).map_err(|e| Fail(UrllcStatus::Serialization, e.to_string()))?;
        *out(out_json, "out_json")? = into_c_string(text)?;
        Ok(())
    })
}

/// # Safety
/// `solution` must be null or a handle from [`urllc_solve`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn urllc_solution_free(solution: *mut UrllcSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Monte Carlo run of a JSON experiment configuration. The summary comes
/// back as JSON and must be released with [`urllc_string_free`].
/// `workers = 0` uses every core.
///
/// # Safety
/// `config_json` must be a NUL-terminated string and `out_summary` writable.
#[no_mangle]
pub unsafe extern "C" fn urllc_monte_carlo(
    config_json: *const c_char,
    workers: usize,
    out_summary: *mut *mut c_char,
) -> UrllcStatus {
    guard(|| {
        if config_json.is_null() {
            return Err(null("config_json"));
        }
        let text = CStr::from_ptr(config_json)
            .to_str()
            .map_err(|e| invalid(format!("config is not UTF-8: {e}")))?;
        let cfg = ExperimentConfig::from_json(text)?;
        let (summary, _) = run_monte_carlo(&cfg, workers)?;
        let json = serde_json::to_string(&summary).map_err(|e| Fail(UrllcStatus::Serialization, e.to_string()))?;
        *out(out_summary, "out_summary")? = into_c_string(json)?;
        Ok(())
    })
}
