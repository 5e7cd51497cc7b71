//! Driver, Euler scheme, drift and TV properties at small Monte Carlo scale.

use alpha_root::lyapunov::{choose_beta_c_m, drift_mc_check, truncated_jump_check, SmoothAbs};
use alpha_root::sim::{simulate_y_terminal, PathRng};
use alpha_root::stats::{ks_two_sample, pearson};
use alpha_root::tv::{tv_decay, BinningRule, SeedPolicy};
use alpha_root::*;
use rand_distr::{Distribution, StandardNormal};

fn ergodic() -> ModelParams {
    ModelParams::new(1.0, 1.0, 1.5, 0.0, 1.0).unwrap()
}

#[test]
fn driver_is_self_similar() {
    // L_dt has the law of dt^{1/alpha} L_1
    let n = 20_000;
    for alpha in [1.2, 1.5, 1.8] {
        let dt = 0.01;
        let small: Vec<f64> = (0..n)
            .map(|i| {
                let mut r = PathRng::new(1, i);
                sample_stable_increment(dt, alpha, &mut r.driver).unwrap() / dt.powf(1.0 / alpha)
            })
            .collect();
        let unit: Vec<f64> = (0..n)
            .map(|i| {
                let mut r = PathRng::new(2, i);
                sample_stable_increment(1.0, alpha, &mut r.driver).unwrap()
            })
            .collect();
        let (d, pv) = ks_two_sample(&small, &unit);
        assert!(pv > 1e-3, "{alpha}: D={d} p={pv}");
    }
}

#[test]
fn driver_and_noise_streams_are_independent() {
    let n = 50_000;
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for i in 0..n as u64 {
        let mut r = PathRng::new(7, i);
        a.push(sample_stable_increment(1.0, 1.5, &mut r.driver).unwrap().clamp(-50.0, 50.0));
        b.push(StandardNormal.sample(&mut r.noise));
    }
    let rho = pearson(&a, &b);
    assert!(rho.abs() < 4.0 / (n as f64).sqrt(), "{rho}");
    let ra = alpha_root::stats::spearman(&a, &b);
    assert!(ra.abs() < 4.0 / (n as f64).sqrt(), "{ra}");
}

#[test]
fn simulation_is_deterministic_per_seed() {
    let p = ergodic();
    let cfg = SimConfig::new(0.01, 1.0, 500, 3);
    let a = simulate_pair(1.0, 0.5, &p, &cfg).unwrap();
    let b = simulate_pair(1.0, 0.5, &p, &cfg).unwrap();
    assert_eq!(a, b);
    let (ys, _) = simulate_y_terminal(1.0, &p, &cfg).unwrap();
    assert_eq!(ys.as_slice(), a.terminal_y());
    let c = simulate_pair(1.0, 0.5, &p, &SimConfig { seed: 4, ..cfg }).unwrap();
    assert_ne!(a.terminal_y(), c.terminal_y());
}

#[test]
fn drift_check_at_time_zero_and_small_scale() {
    let p = ergodic();
    let (spec, _) = choose_beta_c_m(&p, SmoothAbs).unwrap();
    let sim = SimConfig::new(0.01, 1.0, 5_000, 11);
    let c0 = drift_mc_check(10.0, 10.0, 0.0, &spec, &p, &sim).unwrap();
    assert!(c0.pass && c0.lhs == spec.v(10.0, 10.0));
    let c = drift_mc_check(10.0, 10.0, 2.0, &spec, &p, &sim).unwrap();
    assert!(c.pass, "{c:?}");
    // long run: close to stationarity, below M/c
    let c = drift_mc_check(0.0, 0.0, 20.0, &spec, &p, &sim).unwrap();
    assert!(c.lhs <= spec.m_bound / spec.c + 3.0 * c.se, "{c:?}");
}

#[test]
fn truncated_jump_term_decays_like_a_power_of_k() {
    let q = QuadratureConfig::default();
    let alpha = 1.5;
    let mut last = None;
    for k in [1e2, 1e3, 1e4] {
        let (v, bound) = truncated_jump_check(2.0, k, alpha, &q).unwrap();
        assert!(v.abs() <= bound * (1.0 + 1e-8));
        if let Some(prev) = last {
            // K^{1 - alpha}: a factor 10^{-1/2} per decade
            let r: f64 = v / prev;
            assert!((r / 10f64.powf(1.0 - alpha) - 1.0).abs() < 0.1, "{r}");
        }
        last = Some(v);
    }
}

#[test]
fn identical_starts_give_noise_level_tv() {
    let p = ergodic();
    let sim = SimConfig::new(0.01, 1.0, 20_000, 5);
    let r = BinningRule::default();
    let crn = tv_decay((1.0, 0.0), (1.0, 0.0), &[0.5, 1.0], &p, &sim, &r, SeedPolicy::CommonRandomNumbers).unwrap();
    assert!(crn.tv_estimates.iter().all(|&v| v == 0.0));
    let ind = tv_decay((1.0, 0.0), (1.0, 0.0), &[0.5, 1.0], &p, &sim, &r, SeedPolicy::Independent).unwrap();
    for (tv, se) in ind.tv_estimates.iter().zip(&ind.se_proxy) {
        assert!(*tv > 0.0 && tv <= se, "{tv} {se}");
    }
}

#[test]
fn tv_is_stable_under_binning_refinement() {
    let p = ergodic();
    let sim = SimConfig::new(0.01, 2.0, 20_000, 9);
    let ts = [0.5, 1.0, 2.0];
    let base = BinningRule::default();
    let a = tv_decay((0.0, 0.0), (10.0, 10.0), &ts, &p, &sim, &base, SeedPolicy::Independent).unwrap();
    let b = tv_decay((0.0, 0.0), (10.0, 10.0), &ts, &p, &sim, &base.refined(2), SeedPolicy::Independent).unwrap();
    assert!(b.max_bin_counts.iter().all(|&c| c >= base.sparse_count));
    for (i, t) in ts.iter().enumerate() {
        let diff = (a.tv_estimates[i] - b.tv_estimates[i]).abs();
        assert!(diff <= b.se_proxy[i], "t={t}: {} vs {}", a.tv_estimates[i], b.tv_estimates[i]);
    }
    assert!(a.warnings.is_empty());
    let mut csv = Vec::new();
    a.write_csv(&mut csv).unwrap();
    assert!(String::from_utf8(csv).unwrap().starts_with("t,tv,se_proxy\n"));
}
