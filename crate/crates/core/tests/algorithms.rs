use num_complex::Complex64;
use urllc::algorithms::{
    eemax, eemax_diagnostics, energy_efficiency, initialize, maxmin, shannon_baselines, srmax,
    srmax_diagnostics, zfbf_baseline, ShannonObjective, SolveOptions,
};
use urllc::model::{
    downlink_sinr, duality_transfer, gain_matrix, sample_channels, uplink_sinr, CVector, ChannelSet,
    Direction, Geometry, PowerModel, SolveStatus,
};
use urllc::rate::{make_regime, RateRegime};
use urllc::Error;

fn regime() -> RateRegime {
    make_regime(1e-5, 128, 256, false).unwrap()
}

fn basis(n: usize, i: usize, s: f64) -> CVector {
    let mut v = CVector::zeros(n);
    v[i] = Complex64::new(s, 0.0);
    v
}

/// Rate written out from its definition, independent of the crate.
fn rate_oracle(r: &RateRegime, g: f64) -> f64 {
    let v = 1.0 - (1.0 + g).powi(-2);
    (1.0 + g).ln() - r.vartheta * v.sqrt()
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let a = hi - phi * (hi - lo);
        let b = lo + phi * (hi - lo);
        if f(a) < f(b) {
            lo = a;
        } else {
            hi = b;
        }
    }
    f(0.5 * (lo + hi))
}

fn random_instances(k: usize, n_tx: usize) -> Vec<ChannelSet> {
    let r = regime();
    (0..12)
        .map(|s| sample_channels(&Geometry::default(), k, n_tx, s).unwrap())
        .filter(|ch| initialize(ch, &r, 100.0).is_ok())
        .take(4)
        .collect()
}

#[test]
fn single_user_initialization() {
    let r = regime();
    let ch = ChannelSet::from_normalized(vec![basis(3, 1, 1.5)]).unwrap();
    let init = initialize(&ch, &r, 10.0).unwrap();
    assert!((init.p[0] - r.nu3 / 2.25).abs() < 1e-9);
    match initialize(&ch, &r, 1.0) {
        Err(Error::Infeasible { required_power, budget }) => {
            assert!((required_power - r.nu3 / 2.25).abs() < 1e-9);
            assert_eq!(budget, 1.0);
        }
        other => panic!("expected infeasibility, got {other:?}"),
    }
}

#[test]
fn initialization_meets_threshold() {
    let r = regime();
    for ch in random_instances(4, 8) {
        let init = initialize(&ch, &r, 100.0).unwrap();
        for g in downlink_sinr(&ch, &init.w, &init.p).unwrap() {
            assert!((g - r.nu3).abs() < 1e-6);
        }
        assert!(init.total_power() <= 100.0);
        for (lo, q) in init.q_tilde.iter().zip(&init.q) {
            assert!(*lo <= q * (1.0 + 1e-9));
        }
    }
}

#[test]
fn srmax_single_user_uses_full_power() {
    let r = regime();
    let h = CVector::from_vec(vec![Complex64::new(0.3, -0.4), Complex64::new(0.5, 0.2)]);
    let g = h.norm_squared();
    let ch = ChannelSet::from_normalized(vec![h.clone()]).unwrap();
    let sol = srmax(&ch, &r, 50.0, &SolveOptions::default()).unwrap();
    // The inner loop stops at relative gain eps_conv = 1e-4.
    assert!((sol.p[0] - 50.0).abs() < 1e-4 * 50.0);
    assert!((sol.rates[0] - rate_oracle(&r, 50.0 * g)).abs() < 1e-4);
    let align = h.dotc(&sol.w[0]).norm() / h.norm();
    assert!((align - 1.0).abs() < 1e-9);
}

#[test]
fn srmax_orthonormal_matches_grid() {
    let r = regime();
    let p = 10.0;
    let gains = [4.0, 1.0];
    let ch = ChannelSet::from_normalized(vec![basis(2, 0, 2.0), basis(2, 1, 1.0)]).unwrap();
    let sol = srmax(&ch, &r, p, &SolveOptions::default()).unwrap();

    let sum = |p1: f64, p2: f64| rate_oracle(&r, p1 * gains[0]) + rate_oracle(&r, p2 * gains[1]);
    let ok = |p1: f64, p2: f64| p1 * gains[0] >= r.nu3 && p2 * gains[1] >= r.nu3;
    let step = p / 2000.0;
    let mut best = (f64::NEG_INFINITY, 0.0);
    for i in 0..=2000 {
        for j in 0..=(2000 - i) {
            let (p1, p2) = (i as f64 * step, j as f64 * step);
            if ok(p1, p2) && sum(p1, p2) > best.0 {
                best = (sum(p1, p2), p1);
            }
        }
    }
    let lo = (best.1 - step).max(r.nu3 / gains[0]);
    let hi = (best.1 + step).min(p - r.nu3 / gains[1]);
    let polished = golden_max(|p1| sum(p1, p - p1), lo, hi).max(best.0);
    assert!((sol.sum_rate() - polished).abs() < 1e-3, "{} vs {}", sol.sum_rate(), polished);
}

#[test]
fn srmax_inner_objectives_are_monotone() {
    let r = regime();
    for ch in random_instances(4, 8) {
        let (sol, diag) = srmax_diagnostics(&ch, &r, 100.0, &SolveOptions::default()).unwrap();
        for seq in &diag.inner {
            for pair in seq.windows(2) {
                assert!(pair[1] >= pair[0] - 1e-9);
            }
        }
        for pair in diag.outer.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-9);
        }
        assert!(sol.rates.iter().all(|&x| x >= r.r_min - 1e-6));
        assert_ne!(sol.status, SolveStatus::Infeasible);
    }
}

#[test]
fn srmax_iterates_satisfy_constraints() {
    let r = regime();
    let v = |g: f64| 1.0 - (1.0 + g).powi(-2);
    for ch in random_instances(3, 6) {
        let (_, diag) = srmax_diagnostics(&ch, &r, 100.0, &SolveOptions::default()).unwrap();
        assert!(!diag.raw_states.is_empty());
        for st in &diag.states {
            let sum: f64 = st.q.iter().sum();
            assert!(sum <= 100.0 * (1.0 + 1e-9));
            for k in 0..st.q.len() {
                assert!(st.phi[k] >= r.nu3 * (1.0 - 1e-8));
                assert!(st.phi[k] <= st.phi_hat[k] + 1e-8);
                assert!(st.phi_hat[k] <= st.gamma_tilde[k] * (1.0 + 1e-8));
                assert!(st.psi[k] >= v(r.nu3) - 1e-8 && st.psi[k] <= v(st.gamma_tilde[k]) + 1e-8);
                assert!(st.psi[k].sqrt() <= st.theta[k] + 1e-9);
                assert!(st.q_tilde[k] <= st.q[k] * (1.0 + 1e-8));
            }
        }
        for st in &diag.raw_states {
            let k = st.q.len();
            for i in 0..k {
                let (fl, fu) = (r.nu3, st.gamma_tilde[i]);
                for (j, l) in (0..k).filter(|&l| l != i).enumerate() {
                    let (ql, qu) = (st.q_tilde[l], 100.0);
                    let q = st.q[l];
                    for (prod, s) in [(st.a[i][j], st.phi[i]), (st.b[i][j], st.phi_hat[i])] {
                        let tol = 1e-6 * (1.0 + fu * qu);
                        assert!(prod >= fl * q + s * ql - fl * ql - tol);
                        assert!(prod >= fu * q + s * qu - fu * qu - tol);
                        assert!(prod <= fu * q + s * ql - fu * ql + tol);
                        assert!(prod <= fl * q + s * qu - fl * qu + tol);
                    }
                }
            }
        }
    }
}

#[test]
fn srmax_downlink_keeps_uplink_sinrs() {
    let r = regime();
    for ch in random_instances(4, 8) {
        let sol = srmax(&ch, &r, 100.0, &SolveOptions::default()).unwrap();
        let q = duality_transfer(&ch, &sol.w, &sol.gamma, Direction::Uplink).unwrap();
        for (a, b) in uplink_sinr(&ch, &sol.w, &q).unwrap().iter().zip(&sol.gamma) {
            assert!((a - b).abs() <= 1e-8 * b.max(1.0));
        }
        let qs: f64 = q.iter().sum();
        assert!((qs - sol.total_power()).abs() < 1e-8 * qs);
    }
}

#[test]
fn eemax_single_user_matches_grid() {
    let r = regime();
    let pm = PowerModel::default();
    let ch = ChannelSet::from_normalized(vec![basis(4, 2, 1.0)]).unwrap();
    let p_max = 100.0;
    let sol = eemax(&ch, &r, p_max, &pm, &SolveOptions::default()).unwrap();
    let ee = |q: f64| rate_oracle(&r, q) / (pm.eta * q + 4.0 * pm.p_c + pm.p_0);
    let lo = r.nu3;
    let n = 100_000;
    let mut best = (f64::NEG_INFINITY, lo);
    for i in 0..=n {
        let q = lo + (p_max - lo) * i as f64 / n as f64;
        if ee(q) > best.0 {
            best = (ee(q), q);
        }
    }
    let h = (p_max - lo) / n as f64;
    let oracle = golden_max(ee, (best.1 - h).max(lo), (best.1 + h).min(p_max)).max(best.0);
    assert!((sol.objective - oracle).abs() < 1e-4, "{} vs {}", sol.objective, oracle);
    assert!(sol.total_power() < 0.5 * p_max);
}

#[test]
fn eemax_dominates_srmax_on_efficiency() {
    let r = regime();
    let pm = PowerModel::default();
    let opts = SolveOptions::default();
    for ch in random_instances(4, 8) {
        let (ee, diag) = eemax_diagnostics(&ch, &r, 100.0, &pm, &opts).unwrap();
        let sr = srmax(&ch, &r, 100.0, &opts).unwrap();
        let alpha = opts.weights(4).unwrap();
        let ee_sr = energy_efficiency(&sr, &alpha, &pm, ch.n_tx);
        assert!(ee.objective >= ee_sr * (1.0 - opts.eps_conv), "{} vs {}", ee.objective, ee_sr);
        assert!((ee.objective - energy_efficiency(&ee, &alpha, &pm, ch.n_tx)).abs() < 1e-12);
        assert_eq!(diag.lambdas[0], 0.0);
        for pair in diag.lambdas.windows(2) {
            assert!(pair[1] >= pair[0] * (1.0 - 1e-9));
        }
        assert!(ee.rates.iter().all(|&x| x >= r.r_min - 1e-6));
    }
}

#[test]
fn maxmin_single_user() {
    let r = regime();
    let ch = ChannelSet::from_normalized(vec![basis(2, 0, 1.5)]).unwrap();
    let sol = maxmin(&ch, &r, 8.0, &SolveOptions::default()).unwrap();
    assert!((sol.gamma[0] / 18.0 - 1.0).abs() < 1e-7);
    assert!((sol.p[0] / 8.0 - 1.0).abs() < 1e-7);
}

#[test]
fn maxmin_equalizes_and_improves() {
    let r = regime();
    for ch in random_instances(4, 8) {
        let sol = maxmin(&ch, &r, 100.0, &SolveOptions::default()).unwrap();
        let lo = sol.gamma.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = sol.gamma.iter().cloned().fold(0.0, f64::max);
        assert!((hi - lo) / lo < 1e-6);
        assert!(sol.total_power() <= 100.0 * (1.0 + 1e-9));
        for pair in sol.trace.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-9);
        }
        assert!((sol.objective - sol.min_rate()).abs() < 1e-12);
        let init_rate = rate_oracle(&r, r.nu3);
        assert!(sol.objective >= init_rate - 1e-9);
    }
}

#[test]
fn zfbf_orthonormal_and_random() {
    let r = regime();
    let ch = ChannelSet::from_normalized(vec![basis(3, 0, 2.0), basis(3, 2, 0.5)]).unwrap();
    let z = zfbf_baseline(&ch, &r, 10.0).unwrap();
    assert!((z.solution.gamma[0] - 20.0).abs() < 1e-9);
    assert!((z.solution.gamma[1] - 1.25).abs() < 1e-9);
    assert!(!z.feasible);
    assert!(z.solution.rates.iter().all(|&x| x >= 0.0));

    let ch = sample_channels(&Geometry::default(), 5, 8, 3).unwrap();
    let z = zfbf_baseline(&ch, &r, 100.0).unwrap();
    let g = gain_matrix(&ch, &z.solution.w);
    for l in 0..5 {
        for k in (0..5).filter(|&k| k != l) {
            assert!(g[(l, k)] < 1e-20 * g[(l, l)].max(1.0));
        }
    }
}

#[test]
fn zfbf_rank_deficiency_is_reported() {
    let r = regime();
    let v = basis(2, 0, 1.0);
    let ch = ChannelSet::from_normalized(vec![v.clone(), v]).unwrap();
    assert!(matches!(zfbf_baseline(&ch, &r, 10.0), Err(Error::Degenerate(_))));
}

#[test]
fn shannon_baselines_behave() {
    let ch = ChannelSet::from_normalized(vec![basis(2, 1, 1.2)]).unwrap();
    let sol = shannon_baselines(&ch, 5.0, 128, 256, ShannonObjective::SumRate, &SolveOptions::default()).unwrap();
    assert!((sol.rates[0] - (1.0 + 5.0 * 1.44f64).ln()).abs() < 1e-4);

    let r = regime();
    let opts = SolveOptions::default();
    for ch in random_instances(3, 6) {
        let fin = srmax(&ch, &r, 100.0, &opts).unwrap();
        let sh = shannon_baselines(&ch, 100.0, 128, 256, ShannonObjective::SumRate, &opts).unwrap();
        assert!(sh.objective >= fin.objective - 1e-6);
        let mm = shannon_baselines(&ch, 100.0, 128, 256, ShannonObjective::MaxMin, &opts).unwrap();
        assert!(mm.gamma.iter().all(|&g| g >= 3.0 * (1.0 - 1e-9)));
        let via_flag = srmax(&ch, &r, 100.0, &SolveOptions { shannon_mode: true, ..opts.clone() }).unwrap();
        assert!((via_flag.objective - sh.objective).abs() < 1e-9);
    }
}

#[test]
fn weights_are_validated() {
    let r = regime();
    let ch = sample_channels(&Geometry::default(), 2, 4, 1).unwrap();
    for bad in [vec![1.0], vec![0.0, 0.0], vec![-1.0, 2.0]] {
        let opts = SolveOptions { alpha: Some(bad), ..Default::default() };
        assert!(srmax(&ch, &r, 100.0, &opts).is_err());
    }
}

#[test]
fn infeasible_budget_propagates() {
    let r = regime();
    let ch = sample_channels(&Geometry::default(), 4, 8, 2).unwrap();
    assert!(matches!(
        srmax(&ch, &r, 1e-3, &SolveOptions::default()),
        Err(Error::Infeasible { .. })
    ));
    assert!(matches!(
        maxmin(&ch, &r, 1e-3, &SolveOptions::default()),
        Err(Error::Infeasible { .. })
    ));
}
