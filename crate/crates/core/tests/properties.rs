use nalgebra::DVector;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use urllc::convex::{
    bisect_maxmin, maxmin_feasible, min_power_fixed_point, solve_ipm, IpmStatus, LinearRow,
    SeparableObjective, SmoothConvexProgram,
};
use urllc::model::{
    downlink_sinr, duality_transfer, evaluate, gain_matrix, mmse_beamformers, sample_channels,
    uplink_sinr, zf_beamformers, CVector, ChannelSet, Direction, Geometry,
};
use urllc::rate::{make_regime, nu0, rate, rate_derivs, solve_rate_eq_bisect};

fn random_channels(k: usize, n: usize, seed: u64) -> ChannelSet {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let h = (0..k)
        .map(|_| CVector::from_fn(n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
        .collect();
    ChannelSet::from_normalized(h).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rate_falls_then_rises(theta in 0.05f64..5.0, u in 0.001f64..0.999, v in 0.001f64..0.999) {
        let v0 = nu0(theta);
        let (a, b) = (u.min(v), u.max(v));
        prop_assume!(b - a > 1e-6);
        // Below the turning point, on a log scale down to 1e-6·ν₀.
        let lo = |s: f64| v0 * (1e-6f64).powf(1.0 - s);
        prop_assert!(rate(lo(a), theta).unwrap() > rate(lo(b), theta).unwrap());
        // Above it, up to 10³.
        let hi = |s: f64| v0 + (1e3 - v0) * s;
        prop_assert!(rate(hi(a), theta).unwrap() < rate(hi(b), theta).unwrap());
        prop_assert!(rate(v0, theta).unwrap() <= 0.0);
    }

    #[test]
    fn bisection_root_solves_rate_equation(alpha in 0.0f64..3.0, theta in 0.001f64..1.0) {
        let g = solve_rate_eq_bisect(alpha, theta).unwrap();
        prop_assert!((rate(g, theta).unwrap() - alpha).abs() < 1e-9);
        prop_assert!(g >= nu0(theta));
    }

    #[test]
    fn derivatives_match_finite_differences(e in -3.0f64..3.0, theta in 0.05f64..2.0) {
        let g = 10f64.powf(e);
        let (d1, d2, _) = rate_derivs(g, theta).unwrap();
        let h = 1e-4 * g;
        let f = |x: f64| rate(x, theta).unwrap();
        let fd1 = (f(g + h) - f(g - h)) / (2.0 * h);
        prop_assert!((d1 - fd1).abs() <= 1e-5 * d1.abs().max(1e-3 * (1.0 / (1.0 + g))));
        let h2 = 1e-3 * g;
        let fd2 = ((f(g + h2) - f(g)) - (f(g) - f(g - h2))) / (h2 * h2);
        prop_assert!((d2 - fd2).abs() <= 1e-4 * d2.abs().max(1e-3 / ((1.0 + g) * (1.0 + g))));
    }

    #[test]
    fn shannon_rate_is_log(g in 0.0f64..1e6) {
        prop_assert_eq!(rate(g, 0.0).unwrap(), (1.0 + g).ln());
    }

    #[test]
    fn duality_preserves_sinrs_and_power(k in 1usize..=8, extra in 0usize..=8, seed in any::<u64>()) {
        let n = (k + extra).min(16);
        let ch = random_channels(k, n, seed);
        let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x5eed);
        let q: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..5.0)).collect();
        let w = mmse_beamformers(&ch, &q).unwrap();
        let up = uplink_sinr(&ch, &w, &q).unwrap();
        let p = duality_transfer(&ch, &w, &up, Direction::Downlink).unwrap();
        let down = downlink_sinr(&ch, &w, &p).unwrap();
        for (a, b) in up.iter().zip(&down) {
            prop_assert!((a - b).abs() <= 1e-8 * a.max(1.0));
        }
        let (sq, sp): (f64, f64) = (q.iter().sum(), p.iter().sum());
        prop_assert!((sq - sp).abs() <= 1e-8 * sq);
    }

    #[test]
    fn downlink_sinr_ignores_phase(seed in any::<u64>(), angle in -3.2f64..3.2) {
        let ch = random_channels(3, 5, seed);
        let w = mmse_beamformers(&ch, &[1.0, 2.0, 0.5]).unwrap();
        let p = [1.0, 0.3, 2.0];
        let base = downlink_sinr(&ch, &w, &p).unwrap();
        let mut rotated = w.clone();
        rotated[1] *= Complex64::from_polar(1.0, angle);
        for (a, b) in base.iter().zip(&downlink_sinr(&ch, &rotated, &p).unwrap()) {
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }
    }

    #[test]
    fn zero_forcing_nulls_interference(k in 1usize..=6, extra in 0usize..=6, seed in any::<u64>()) {
        let ch = random_channels(k, k + extra, seed);
        let w = zf_beamformers(&ch).unwrap();
        for (l, h) in ch.h_bar.iter().enumerate() {
            for (j, wj) in w.iter().enumerate() {
                if j != l {
                    prop_assert!(h.dotc(wj).norm() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn stored_rates_follow_stored_sinrs(seed in 0u64..1000) {
        let regime = make_regime(1e-5, 128, 256, false).unwrap();
        let ch = sample_channels(&Geometry::default(), 4, 8, seed).unwrap();
        let w = mmse_beamformers(&ch, &[10.0; 4]).unwrap();
        let sol = evaluate(&ch, &w, &[25.0; 4], &regime, false).unwrap();
        for (g, r) in sol.gamma.iter().zip(&sol.rates) {
            prop_assert!((regime.rate(*g) - r).abs() <= 1e-12);
        }
    }

    #[test]
    fn min_power_meets_targets(k in 1usize..=4, seed in any::<u64>(), target in 0.2f64..3.0) {
        let ch = random_channels(k, k + 2, seed);
        if let Ok(r) = min_power_fixed_point(&ch, target, 1e6, 1e-12, 10_000) {
            for g in uplink_sinr(&ch, &r.w, &r.q).unwrap() {
                prop_assert!((g - target).abs() < 1e-8 * target.max(1.0));
            }
        }
    }

    #[test]
    fn maxmin_level_is_tight(k in 1usize..=5, seed in any::<u64>(), p in 1.0f64..50.0) {
        let ch = random_channels(k, k + 2, seed);
        let w = mmse_beamformers(&ch, &vec![1.0; k]).unwrap();
        let hi = ch.sinr_caps(p).into_iter().fold(f64::INFINITY, f64::min);
        let lo = 1e-6;
        prop_assume!(maxmin_feasible(&ch, &w, lo, p).is_ok());
        let tol = 1e-8;
        let (mu, q) = bisect_maxmin(&ch, &w, p, lo, hi, tol).unwrap();
        prop_assert!(q.iter().sum::<f64>() <= p * (1.0 + 1e-12));
        if mu < hi {
            prop_assert!(maxmin_feasible(&ch, &w, mu * (1.0 + 10.0 * tol), p).is_err());
        }
    }

    #[test]
    fn barrier_stages_improve_objective(
        weights in proptest::collection::vec(0.1f64..3.0, 2..5),
        caps in proptest::collection::vec(0.5f64..20.0, 5),
        budget in 1.0f64..30.0,
    ) {
        let n = weights.len();
        let obj = SeparableObjective {
            log_terms: weights.iter().enumerate().map(|(i, &w)| (i, w)).collect(),
            linear: Vec::new(),
            constant: 0.0,
        };
        let mut prog = SmoothConvexProgram::new(n, Box::new(obj));
        for i in 0..n {
            prog.bounds[i] = (0.0, caps[i]);
        }
        prog.linear_ineq.push(LinearRow { a: (0..n).map(|i| (i, 1.0)).collect(), b: budget });
        let x0 = DVector::from_element(n, 1e-3);
        let rep = solve_ipm(&prog, &x0);
        prop_assert_eq!(rep.status, IpmStatus::Optimal);
        for pair in rep.stage_objectives.windows(2) {
            prop_assert!(pair[1] >= pair[0] - 1e-9);
        }
        prop_assert!(prog.max_violation(&rep.x_star) <= 1e-9);
        // Water-filling gives the exact optimum.
        let total = |level: f64| (0..n).map(|i| (weights[i] * level - 1.0).clamp(0.0, caps[i])).sum::<f64>();
        let (mut lo, mut hi) = (0.0, 1e6);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if total(mid) > budget { hi = mid } else { lo = mid }
        }
        let x: Vec<f64> = (0..n).map(|i| (weights[i] * lo - 1.0).clamp(0.0, caps[i])).collect();
        let best: f64 = (0..n).map(|i| weights[i] * (1.0 + x[i]).ln()).sum();
        prop_assert!((rep.obj - best).abs() < 1e-6 * best.max(1.0));
    }
}

#[test]
fn gain_matrix_matches_definition() {
    let ch = random_channels(3, 4, 9);
    let w = mmse_beamformers(&ch, &[1.0, 1.0, 1.0]).unwrap();
    let g = gain_matrix(&ch, &w);
    for l in 0..3 {
        for k in 0..3 {
            let direct: Complex64 = ch.h_bar[l].iter().zip(w[k].iter()).map(|(a, b)| a.conj() * b).sum();
            assert!((g[(l, k)] - direct.norm_sqr()).abs() < 1e-12);
        }
    }
}
