//! Finite-blocklength achievable rate and its SINR thresholds.
//!
//! The normal approximation of the rate of an AWGN link at SINR `γ` is
//!
//! ```text
//! R(γ) = ln(1+γ) − ϑ·√V(γ),   V(γ) = 1 − (1+γ)⁻²,   ϑ = Q⁻¹(ε)/√n
//! ```
//!
//! in nats per channel use. `R` dips below zero right after the origin,
//! bottoms out at `ν₀`, crosses zero again at `ν₂`, reaches the payload rate
//! at `ν₃` and has a single inflection point at `ν₄`.
//!
//! Roots of `R(γ) = α` are computed by bisection; the closed-form series in
//! [`gen_lambert_w`] is kept as a cross-check and for the Table-style report.

use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, SQRT_2};

use crate::error::{Error, Result};

/// Default truncation depth of the generalized Lambert W series.
pub const DEFAULT_SERIES_TERMS: usize = 270;

const KAPPA_TOL: f64 = 1e-14;
const NU4_TOL: f64 = 1e-12;

/// Gaussian tail probability `Q(x) = P[N(0,1) > x]`.
pub fn q_func(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Acklam's rational approximation of the standard normal quantile.
fn acklam_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e1,
        2.209460984245205e2,
        -2.759285104469687e2,
        1.383577518672690e2,
        -3.066479806614716e1,
        2.506628277459239,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e1,
        1.615858368580409e2,
        -1.556989798598866e2,
        6.680131188771972e1,
        -1.328068155288572e1,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-3,
        -3.223964580411365e-1,
        -2.400758277161838,
        -2.549732539343734,
        4.374664141464968,
        2.938163982698783,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-3,
        3.224671290700398e-1,
        2.445134137142996,
        3.754408661907416,
    ];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// Inverse of the Gaussian tail probability.
///
/// A rational initial guess is polished by three Newton steps on `Q`.
pub fn q_inv(epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain(format!(
            "Q^-1 needs 0 < epsilon < 1, got {epsilon}"
        )));
    }
    if epsilon == 0.5 {
        return Ok(0.0);
    }
    let mut x = -acklam_quantile(epsilon);
    for _ in 0..3 {
        x += (q_func(x) - epsilon) / std_normal_pdf(x);
    }
    Ok(x)
}

/// Channel dispersion `V(γ) = 1 − (1+γ)⁻²`.
pub fn dispersion(gamma: f64) -> f64 {
    let u = 1.0 + gamma;
    gamma * (2.0 + gamma) / (u * u)
}

/// Achievable rate in nats per channel use. Negative for small `γ` when `ϑ > 0`.
pub fn rate(gamma: f64, vartheta: f64) -> Result<f64> {
    if gamma.is_nan() || gamma < 0.0 {
        return Err(Error::Domain(format!("rate needs gamma >= 0, got {gamma}")));
    }
    Ok(rate_unchecked(gamma, vartheta))
}

#[inline]
pub(crate) fn rate_unchecked(gamma: f64, vartheta: f64) -> f64 {
    gamma.ln_1p() - vartheta * dispersion(gamma).sqrt()
}

/// `(R′, R″, g)` where `g(γ) = (3(1+γ)²−2) / ((1+γ)((1+γ)²−1)^{3/2})`.
///
/// `R″ = −(1 − ϑ·g)/(1+γ)²`, so the sign of the curvature is decided by `ϑ·g`.
pub fn rate_derivs(gamma: f64, vartheta: f64) -> Result<(f64, f64, f64)> {
    if !(gamma > 0.0) {
        return Err(Error::Domain(format!(
            "rate derivatives need gamma > 0, got {gamma}"
        )));
    }
    let u = 1.0 + gamma;
    let w = gamma * (2.0 + gamma);
    let sw = w.sqrt();
    let d1 = (1.0 - vartheta / (u * sw)) / u;
    let g = curvature_g(gamma);
    let d2 = -(1.0 - vartheta * g) / (u * u);
    Ok((d1, d2, g))
}

fn curvature_g(gamma: f64) -> f64 {
    let u = 1.0 + gamma;
    let w = gamma * (2.0 + gamma);
    (3.0 * u * u - 2.0) / (u * w * w.sqrt())
}

/// Stationary point of `R`: decreasing before it, increasing after.
pub fn nu0(vartheta: f64) -> f64 {
    let s = (1.0 + 4.0 * vartheta * vartheta).sqrt();
    ((1.0 + s) / 2.0).sqrt() - 1.0
}

/// Bessel polynomial `B_m(z) = Σ_{k≤m} (m+k)!/(k!(m−k)!)·(z/2)^k`.
pub fn bessel_poly(m: usize, z: f64) -> f64 {
    let half = 0.5 * z;
    let mut coeff = 1.0;
    let mut pow = 1.0;
    let mut sum = 1.0;
    for k in 0..m {
        coeff *= ((m + k + 1) * (m - k)) as f64 / (k + 1) as f64;
        pow *= half;
        sum += coeff * pow;
    }
    sum
}

/// `(ln|B_n(z)|, sign B_n(z))`, stable for degrees where `B_n` overflows.
fn ln_bessel_poly(n: usize, z: f64) -> (f64, f64) {
    if z == 0.0 || n == 0 {
        return (0.0, 1.0);
    }
    let ln_half = (0.5 * z.abs()).ln();
    let neg = z < 0.0;
    let mut logs = Vec::with_capacity(n + 1);
    let mut ln_c = 0.0;
    logs.push(0.0);
    for k in 0..n {
        ln_c += (((n + k + 1) * (n - k)) as f64).ln() - ((k + 1) as f64).ln();
        logs.push(ln_c + (k + 1) as f64 * ln_half);
    }
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut acc = 0.0;
    for (k, l) in logs.iter().enumerate() {
        let s = if neg && k % 2 == 1 { -1.0 } else { 1.0 };
        acc += s * (l - top).exp();
    }
    (top + acc.abs().ln(), acc.signum())
}

/// Which Bessel-polynomial argument the Lagrange-inversion series uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesArgument {
    /// `−2/(m(ι₂−ι₁))`, scaled by the term index. Converges on every row of the accuracy table.
    #[default]
    PerTerm,
    /// `−2/(ι₂−ι₁)`, fixed across terms. Diverges or is biased; kept for comparison.
    Fixed,
}

/// Generalized Lambert W root of `e^x(x−ι₁)(x−ι₂) = μ` via its series expansion.
pub fn gen_lambert_w(iota1: f64, iota2: f64, mu: f64, terms: usize) -> Result<f64> {
    gen_lambert_w_with(iota1, iota2, mu, terms, SeriesArgument::PerTerm)
}

/// [`gen_lambert_w`] with an explicit choice of Bessel argument.
pub fn gen_lambert_w_with(
    iota1: f64,
    iota2: f64,
    mu: f64,
    terms: usize,
    arg: SeriesArgument,
) -> Result<f64> {
    let gap = iota2 - iota1;
    if gap == 0.0 || !gap.is_finite() {
        return Err(Error::Domain("series needs iota1 != iota2".into()));
    }
    let mut sum = 0.0;
    let mut ln_fact = 0.0;
    for m in 1..=terms {
        let mf = m as f64;
        ln_fact += mf.ln();
        let y = mu * mf * (-iota1).exp() / gap;
        if y == 0.0 {
            break;
        }
        let z = match arg {
            SeriesArgument::PerTerm => -2.0 / (mf * gap),
            SeriesArgument::Fixed => -2.0 / gap,
        };
        let (ln_b, sign_b) = ln_bessel_poly(m - 1, z);
        let ln_mag = mf * y.abs().ln() - mf.ln() - ln_fact + ln_b;
        let sign_y = if y < 0.0 && m % 2 == 1 { -1.0 } else { 1.0 };
        let term = sign_y * sign_b * ln_mag.exp();
        if !term.is_finite() {
            return Err(Error::Numeric(format!("series term {m} is not finite")));
        }
        sum += term;
        if !sum.is_finite() {
            return Err(Error::Numeric("series partial sum is not finite".into()));
        }
        if term.abs() < 1e-16 * sum.abs() {
            break;
        }
    }
    Ok(iota1 - sum)
}

/// Series estimate of the SINR solving `R(γ) = α`.
pub fn solve_rate_eq_series(alpha: f64, vartheta: f64, terms: usize) -> Result<f64> {
    let beta = (-alpha).exp();
    let kappa = gen_lambert_w(
        2.0 * vartheta,
        -2.0 * vartheta,
        -4.0 * beta * beta * vartheta * vartheta,
        terms,
    )?;
    Ok((alpha + 0.5 * kappa).exp_m1())
}

/// SINR solving `R(γ) = α` by bisection on `κ = 2(ln(1+γ) − α)`.
///
/// The root of `e^κ(κ−2ϑ)(κ+2ϑ) + 4β²ϑ²` with `β = e^{−α}` is bracketed in
/// `(0, 2ϑ]`; the expression is evaluated in a cancellation-free form.
pub fn solve_rate_eq_bisect(alpha: f64, vartheta: f64) -> Result<f64> {
    if !(alpha >= 0.0) || !(vartheta > 0.0) {
        return Err(Error::Domain(format!(
            "bisection needs alpha >= 0 and vartheta > 0, got ({alpha}, {vartheta})"
        )));
    }
    let four_t2 = 4.0 * vartheta * vartheta;
    let one_minus_b2 = -(-2.0 * alpha).exp_m1();
    let f = |k: f64| k.exp_m1() * (k * k - four_t2) + k * k - four_t2 * one_minus_b2;
    let (mut lo, mut hi) = (0.0_f64, 2.0 * vartheta);
    while hi - lo > KAPPA_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((alpha + 0.25 * (lo + hi)).exp_m1())
}

/// Inflection point of `R`, the root of `ϑ·g(γ) = 1`.
pub fn nu4(vartheta: f64) -> Result<f64> {
    if !(vartheta > 0.0) {
        return Err(Error::Domain(format!(
            "inflection point needs vartheta > 0, got {vartheta}"
        )));
    }
    let h = |g: f64| vartheta * curvature_g(g) - 1.0;
    let mut hi = 1.0;
    while h(hi) > 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    while hi - lo > NU4_TOL * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Reliability/latency regime shared by every optimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRegime {
    pub epsilon: f64,
    pub n: u32,
    pub d_bits: u32,
    pub vartheta: f64,
    /// Payload rate `D/n·ln2`, nats per channel use.
    pub r_min: f64,
    pub nu0: f64,
    pub nu2: f64,
    pub nu3: f64,
    /// Zero in Shannon mode, where the rate has no inflection point.
    pub nu4: f64,
    pub shannon_mode: bool,
}

impl RateRegime {
    pub fn rate(&self, gamma: f64) -> f64 {
        rate_unchecked(gamma.max(0.0), self.vartheta)
    }
}

/// Assembles a regime from `(ε, n, D)`.
///
/// Shannon mode drops the dispersion penalty and uses `ν̃₃ = 2^{D/n} − 1`.
pub fn make_regime(epsilon: f64, n: u32, d_bits: u32, shannon_mode: bool) -> Result<RateRegime> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::Domain(format!(
            "epsilon must lie in (0, 0.5), got {epsilon}"
        )));
    }
    if n == 0 || d_bits == 0 {
        return Err(Error::Domain("blocklength and payload must be positive".into()));
    }
    let r_min = d_bits as f64 / n as f64 * LN_2;
    if shannon_mode {
        return Ok(RateRegime {
            epsilon,
            n,
            d_bits,
            vartheta: 0.0,
            r_min,
            nu0: 0.0,
            nu2: 0.0,
            nu3: (d_bits as f64 / n as f64).exp2() - 1.0,
            nu4: 0.0,
            shannon_mode,
        });
    }
    let vartheta = q_inv(epsilon)? / (n as f64).sqrt();
    Ok(RateRegime {
        epsilon,
        n,
        d_bits,
        vartheta,
        r_min,
        nu0: nu0(vartheta),
        nu2: solve_rate_eq_bisect(0.0, vartheta)?,
        nu3: solve_rate_eq_bisect(r_min, vartheta)?,
        nu4: nu4(vartheta)?,
        shannon_mode,
    })
}

/// Shannon-rate regime: `ϑ = 0` (the `ε = ½` point) and `ν̃₃ = 2^{D/n} − 1`.
pub fn shannon_regime(n: u32, d_bits: u32) -> Result<RateRegime> {
    let mut r = make_regime(0.25, n, d_bits, true)?;
    r.epsilon = 0.5;
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn q_inv_known_points() {
        assert_eq!(q_inv(0.5).unwrap(), 0.0);
        assert!((q_inv(q_func(1.0)).unwrap() - 1.0).abs() < 1e-12);
        assert!((q_inv(1e-5).unwrap() - 4.264890793922825).abs() < 1e-9);
        assert!(q_inv(0.0).is_err());
        assert!(q_inv(1.0).is_err());
    }

    #[test]
    fn q_inv_inverts_q_across_decades() {
        for e in 1..=14 {
            let eps = 10f64.powi(-e);
            let x = q_inv(eps).unwrap();
            assert_relative_eq!(q_func(x), eps, max_relative = 1e-12);
        }
    }

    #[test]
    fn rate_examples() {
        assert_eq!(rate(0.0, 0.7).unwrap(), 0.0);
        assert!((rate(std::f64::consts::E - 1.0, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((rate(1.617081, 0.5).unwrap() - 0.5).abs() < 1e-6);
        assert!(rate(-1.0, 0.1).is_err());
    }

    #[test]
    fn derivative_examples() {
        let (d1, d2, _) = rate_derivs(1.0, 0.0).unwrap();
        assert!((d1 - 0.5).abs() < 1e-15);
        assert!((d2 + 0.25).abs() < 1e-15);
        let (d1, _, _) = rate_derivs(nu0(0.5), 0.5).unwrap();
        assert!(d1.abs() < 1e-10);
        assert!(rate_derivs(0.0, 0.5).is_err());
    }

    #[test]
    fn derivatives_match_central_differences() {
        let (g, t, h) = (0.5, 0.3, 1e-5);
        let (d1, d2, _) = rate_derivs(g, t).unwrap();
        let r = |x: f64| rate(x, t).unwrap();
        let fd1 = (r(g + h) - r(g - h)) / (2.0 * h);
        let fd2 = (r(g + h) - 2.0 * r(g) + r(g - h)) / (h * h);
        assert!((d1 - fd1).abs() < 1e-6);
        assert!((d2 - fd2).abs() < 1e-4);
    }

    #[test]
    fn nu0_closed_forms() {
        assert_eq!(nu0(0.0), 0.0);
        assert!((nu0(2f64.sqrt()) - (2f64.sqrt() - 1.0)).abs() < 1e-15);
        assert!(rate(nu0(0.5), 0.5).unwrap() <= 0.0);
    }

    #[test]
    fn bessel_low_orders() {
        for &z in &[-1.3, 0.0, 0.4, 2.5] {
            assert_eq!(bessel_poly(0, z), 1.0);
            assert!((bessel_poly(1, z) - (1.0 + z)).abs() < 1e-14);
            assert!((bessel_poly(2, z) - (1.0 + 3.0 * z + 3.0 * z * z)).abs() < 1e-13);
            let (l, s) = ln_bessel_poly(2, z);
            assert!((s * l.exp() - bessel_poly(2, z)).abs() < 1e-12);
        }
    }

    #[test]
    fn series_table_points() {
        let g = solve_rate_eq_series(0.0, 0.5, DEFAULT_SERIES_TERMS).unwrap();
        assert!((g - 0.429433).abs() < 5e-7);
        let g = solve_rate_eq_series(0.0, 10.0, DEFAULT_SERIES_TERMS).unwrap();
        assert!((g / 22025.465568 - 1.0).abs() < 1e-8);
        let g = solve_rate_eq_series(0.0, 0.001, DEFAULT_SERIES_TERMS).unwrap();
        let exact = solve_rate_eq_bisect(0.0, 0.001).unwrap();
        assert!(g > 5.0 * exact);
    }

    #[test]
    fn fixed_argument_variant_disagrees() {
        let exact = solve_rate_eq_bisect(0.5, 0.5).unwrap();
        let beta = (-0.5f64).exp();
        let k = gen_lambert_w_with(1.0, -1.0, -beta * beta, 60, SeriesArgument::Fixed);
        let off = match k {
            Ok(k) => ((0.5 + 0.5 * k).exp_m1() - exact).abs(),
            Err(_) => f64::INFINITY,
        };
        assert!(off > 1e-3);
    }

    #[test]
    fn bisection_table_points() {
        assert!((solve_rate_eq_bisect(0.0, 0.001).unwrap() - 0.000002).abs() < 5e-7);
        assert!((solve_rate_eq_bisect(0.5, 0.01).unwrap() - 0.661943).abs() < 5e-7);
        assert!((solve_rate_eq_bisect(2.0, 2.0).unwrap() - 53.579824).abs() < 5e-6);
    }

    #[test]
    fn nu4_examples() {
        let v = nu4(1.0).unwrap();
        assert!(v > 0.9 && v < 1.0);
        assert!((curvature_g(v) - 1.0).abs() < 1e-10);
        assert!(nu4(1.0).unwrap() > nu4(0.5).unwrap());
        for &t in &[0.1, 0.5, 2.0] {
            let v = nu4(t).unwrap();
            let d = 1e-3 * v;
            assert!(rate_derivs(v - d, t).unwrap().1 > 0.0);
            assert!(rate_derivs(v + d, t).unwrap().1 < 0.0);
        }
    }

    #[test]
    fn regime_examples() {
        let r = make_regime(1e-5, 128, 256, false).unwrap();
        assert!((r.vartheta - 0.37697).abs() < 1e-5);
        assert!(r.nu0 < r.nu2 && r.nu2 < r.nu3);
        let s = make_regime(1e-5, 128, 256, true).unwrap();
        assert_eq!(s.nu3, 3.0);
        assert_eq!(s.vartheta, 0.0);
        assert!(make_regime(0.5, 128, 256, false).is_err());
    }
}
