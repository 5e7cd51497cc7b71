//! Acceptance criteria 1-12. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails. Tolerances are the constants below.

use std::f64::consts::{FRAC_PI_2, PI};
use std::time::Instant;

use alpha_root::bounds::{ray_exponent_fit, geometric_grid, modulus_ratio_limit};
use alpha_root::density::cdf_many;
use alpha_root::harness::{self, Command, RunConfig};
use alpha_root::lyapunov::{
    certify_on_grid, choose_beta_c_m, drift_mc_check, levy_jump_integral, ExpTest, SmoothAbs,
};
use alpha_root::sim::{empirical_atom_of, simulate_y_terminal, PathRng};
use alpha_root::stats::mean_se;
use alpha_root::tv::{tv_decay, BinningRule, SeedPolicy};
use alpha_root::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 42;

// 1
const RESIDUAL_TOL: f64 = 1e-6;
const FD_STEP: f64 = 1e-5;
// 2
const FLOW_TOL: f64 = 1e-10;
const FLOW_TRIPLES: usize = 100;
// 3
const MC_PATHS: usize = 100_000;
const MC_SIGMAS: f64 = 3.0;
const BIAS_PER_DT: f64 = 0.25;
const DTS: [f64; 3] = [1e-2, 1e-3, 1e-4];
// 4
const DRIVER_DRAWS: usize = 1_000_000;
const EXP_TWO_THIRDS: f64 = 1.947_734_041_054_675_7;
const LEVY_CONSTANT_TOL: f64 = 1e-8;
// 5
const NORM_TOL: f64 = 1e-4;
// 6
const DUAL_TOL: f64 = 1e-6;
const DUAL_POINTS: usize = 100;
// 7
const HIST_SIGMAS: f64 = 4.0;
const HIST_FRACTION: f64 = 0.95;
const HIST_WIDTH: f64 = 0.1;
const HIST_BINS: usize = 80;
// 8
const DRIFT_DT: f64 = 1e-2;
// 9
const SLOPE_TOL: f64 = 0.05;
const RATIO_SLACK: f64 = 1.05;
// 10
const SPEARMAN_MAX: f64 = -0.9;
const TV_DT: f64 = 1e-2;
// 11
const ATOM_REL_TOL: f64 = 0.5;
// 12
const DETERMINISM_PATHS: usize = 2_000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(n: usize, name: &str, started: Instant, o: Result<Outcome>) -> bool {
    let secs = started.elapsed().as_secs_f64();
    match o {
        Ok(o) => {
            let tag = if o.pass { "PASS" } else { "FAIL" };
            println!("{tag} {n:>2} {name}: {} [{secs:.1}s]", o.detail);
            o.pass
        }
        Err(e) => {
            println!("FAIL {n:>2} {name}: error {e} [{secs:.1}s]");
            false
        }
    }
}

fn reference() -> ModelParams {
    ModelParams::alpha_root(1.0, 1.0, 1.5).unwrap()
}

fn c1_residual() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for alpha in [1.2, 1.5, 1.8] {
        for b in [0.5, 1.0, 2.0] {
            let p = ModelParams::alpha_root(1.0, b, alpha)?;
            for i in 0..12 {
                let t = 0.1 + 2.9 * i as f64 / 11.0;
                for j in 0..12 {
                    let l = 0.1 * 100f64.powf(j as f64 / 11.0);
                    let v = riccati_v(t, l.into(), &p)?.re;
                    let dv = (riccati_v(t + FD_STEP, l.into(), &p)?.re
                        - riccati_v(t - FD_STEP, l.into(), &p)?.re)
                        / (2.0 * FD_STEP);
                    let r = (dv + b * v + v.powf(alpha) / alpha).abs() / (1.0 + v.abs());
                    worst = worst.max(r);
                    count += 1;
                }
            }
        }
    }
    Ok(Outcome {
        pass: worst < RESIDUAL_TOL,
        detail: format!("max scaled residual {worst:.3e} over {count} points (tol {RESIDUAL_TOL:e})"),
    })
}

fn c2_flow() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    for _ in 0..FLOW_TRIPLES {
        let t: f64 = rng.random_range(0.0..3.0);
        let s: f64 = rng.random_range(0.0..3.0);
        let l = 10f64.powf(rng.random_range(-1.0..1.0));
        let alpha = rng.random_range(1.1..1.9);
        let b = rng.random_range(0.5..2.0);
        let p = ModelParams::alpha_root(1.0, b, alpha)?;
        let lhs = riccati_v(t + s, l.into(), &p)?;
        let rhs = riccati_v(t, riccati_v(s, l.into(), &p)?, &p)?;
        worst = worst.max((lhs - rhs).norm() / lhs.norm());
    }
    Ok(Outcome {
        pass: worst < FLOW_TOL,
        detail: format!("max relative defect {worst:.3e} over {FLOW_TRIPLES} triples (tol {FLOW_TOL:e})"),
    })
}

/// Terminal `Y_1` from `y0 = 1` under the reference parameters, per dt.
fn reference_ensembles() -> Result<Vec<(f64, Vec<f64>)>> {
    DTS.iter()
        .map(|&dt| {
            let cfg = SimConfig::new(dt, 1.0, MC_PATHS, SEED);
            Ok((dt, simulate_y_terminal(1.0, &reference(), &cfg)?.0))
        })
        .collect()
}

fn c3_transform(ens: &[(f64, Vec<f64>)]) -> Result<Outcome> {
    let q = QuadratureConfig::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for (dt, ys) in ens {
        let allowance = BIAS_PER_DT * dt;
        let mut worst: f64 = 0.0;
        for l in [0.5, 1.0, 2.0] {
            let exact = laplace_y(1.0, 1.0, l, &reference(), &q)?;
            let v: Vec<f64> = ys.iter().map(|y| (-l * y).exp()).collect();
            let (m, se) = mean_se(&v);
            let z = (m - exact).abs() / (MC_SIGMAS * se + allowance);
            worst = worst.max(z);
            pass &= z <= 1.0;
        }
        parts.push(format!("dt={dt:e} worst |diff|/(3SE+{allowance:e})={worst:.3}"));
    }
    Ok(Outcome {
        pass,
        detail: parts.join("; "),
    })
}

fn c4_driver() -> Result<Outcome> {
    let q = QuadratureConfig::default();
    // the constant from the Levy measure: J[e^{-l y}](1) = e^{-l} l^alpha / alpha
    let j = levy_jump_integral(1.0, 1.5, &ExpTest { lambda: 1.0 }, &[], &q)?;
    let recomputed = (j * 1f64.exp()).exp();
    let mut pass = (recomputed - EXP_TWO_THIRDS).abs() < LEVY_CONSTANT_TOL;
    let mut parts = vec![format!("Levy-measure exp(2/3)={recomputed:.10}")];
    for alpha in [1.2, 1.5, 1.8] {
        let draws: Vec<f64> = (0..DRIVER_DRAWS)
            .map(|i| {
                let mut rng = PathRng::new(SEED, i as u64);
                sample_stable_increment(1.0, alpha, &mut rng.driver)
            })
            .collect::<Result<_>>()?;
        for l in [0.5, 1.0] {
            let v: Vec<f64> = draws.iter().map(|z| (-l * z).exp()).collect();
            let (m, se) = mean_se(&v);
            let exact = (l.powf(alpha) / alpha).exp();
            let z = (m - exact).abs() / se;
            pass &= z <= MC_SIGMAS;
            parts.push(format!("({alpha},{l}) z={z:.2}"));
        }
    }
    Ok(Outcome {
        pass,
        detail: parts.join(" "),
    })
}

fn c5_normalisation() -> Result<Outcome> {
    let q = QuadratureConfig::default();
    let xs: Vec<f64> = (0..512).map(|i| 20.0 * i as f64 / 511.0).collect();
    let mut pass = true;
    let mut parts = Vec::new();
    for y0 in [0.0, 1.0] {
        let g = density_grid(1.0, y0, &xs, &reference(), &q, Representation::Fourier)?;
        let interior_min = g.values[1..511].iter().cloned().fold(f64::INFINITY, f64::min);
        pass &= g.norm_defect < NORM_TOL && interior_min > 0.0;
        parts.push(format!(
            "y0={y0}: defect {:.3e} (trapezoid {:.8} + tails), min interior {interior_min:.3e}",
            g.norm_defect,
            g.trapezoid()
        ));
    }
    Ok(Outcome {
        pass,
        detail: parts.join("; "),
    })
}

fn c6_dual() -> Result<Outcome> {
    let q = QuadratureConfig::default();
    let xs: Vec<f64> = (0..DUAL_POINTS)
        .map(|i| 0.1 + 9.9 * i as f64 / (DUAL_POINTS - 1) as f64)
        .collect();
    let f = density_grid(1.0, 0.0, &xs, &reference(), &q, Representation::Fourier)?;
    let r = density_grid(1.0, 0.0, &xs, &reference(), &q, Representation::RealAxis)?;
    let worst = f
        .values
        .iter()
        .zip(&r.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(Outcome {
        pass: worst < DUAL_TOL,
        detail: format!("max |fourier - real_axis| {worst:.3e} on {DUAL_POINTS} points of [0.1, 10]"),
    })
}

fn c7_histogram(ys: &[f64]) -> Result<Outcome> {
    let q = QuadratureConfig::default();
    let edges: Vec<f64> = (0..=HIST_BINS).map(|i| HIST_WIDTH * i as f64).collect();
    let cdf = cdf_many(1.0, 1.0, &edges, &reference(), &q)?;
    let mut counts = vec![0u64; HIST_BINS];
    for &y in ys {
        let k = (y / HIST_WIDTH).floor();
        if k >= 0.0 && (k as usize) < HIST_BINS {
            counts[k as usize] += 1;
        }
    }
    let n = ys.len() as f64;
    let mut occupied = 0;
    let mut within = 0;
    for k in 0..HIST_BINS {
        if counts[k] == 0 {
            continue;
        }
        occupied += 1;
        let p = cdf[k + 1] - cdf[k];
        let sigma = (n * p * (1.0 - p)).sqrt();
        if (counts[k] as f64 - n * p).abs() <= HIST_SIGMAS * sigma {
            within += 1;
        }
    }
    let frac = within as f64 / occupied as f64;
    Ok(Outcome {
        pass: frac >= HIST_FRACTION,
        detail: format!(
            "{within}/{occupied} occupied bins within {HIST_SIGMAS} sigma ({:.1}%, need {:.0}%), dt=1e-3",
            100.0 * frac,
            100.0 * HIST_FRACTION
        ),
    })
}

fn c8_drift() -> Result<Outcome> {
    let p = ModelParams::new(1.0, 1.0, 1.5, 0.0, 1.0)?;
    let (spec, cert) = choose_beta_c_m(&p, SmoothAbs)?;
    let grid_max = certify_on_grid(&spec, &p, 50.0, 50.0, 200);
    let c_ok = spec.c == (p.b / 2.0).min(p.theta);
    // off-grid: nonpositive y coefficient, and c <= theta for the |x| >= 2 bound
    let signs_ok = cert.y_coefficient <= 0.0 && spec.c <= p.theta;
    let sim = SimConfig::new(DRIFT_DT, 2.0, MC_PATHS, SEED);
    let check = drift_mc_check(10.0, 10.0, 2.0, &spec, &p, &sim)?;
    Ok(Outcome {
        pass: c_ok && signs_ok && grid_max <= 0.0 && check.pass,
        detail: format!(
            "c={} beta={:.4} M={:.4}; grid max of AV+cV-M {grid_max:.3e}; E V={:.4} (SE {:.4}) vs {:.4}",
            spec.c, spec.beta, spec.m_bound, check.lhs, check.se, check.rhs
        ),
    })
}

fn c9_exponents() -> Result<Outcome> {
    let q = QuadratureConfig::default();
    let far = geometric_grid(1e6, 1e12, 7)?;
    let near = geometric_grid(2.0, 512.0, 9)?;
    let mut pass = true;
    let mut parts = Vec::new();
    for alpha in [1.2, 1.5, 1.8] {
        let p = ModelParams::alpha_root(1.0, 1.0, alpha)?;
        let f = ray_exponent_fit(1.0, &p, FRAC_PI_2, &far, &q)?;
        let small = ray_exponent_fit(1.0, &p, FRAC_PI_2, &near, &q)?;
        let m = ray_exponent_fit(1.0, &p, 0.75 * PI, &near, &q)?;
        let max_ratio = m.ratios(alpha).into_iter().fold(0.0, f64::max);
        let bound = RATIO_SLACK * modulus_ratio_limit(alpha);
        pass &= (f.slope - (2.0 - alpha)).abs() < SLOPE_TOL && max_ratio <= bound;
        parts.push(format!(
            "alpha={alpha}: slope {:.4} on [1e6,1e12] ({:.4} on [2,512]), max ratio at 3pi/4 {max_ratio:.3} <= {bound:.3}",
            f.slope, small.slope
        ));
    }
    Ok(Outcome {
        pass,
        detail: parts.join("; "),
    })
}

fn c10_tv() -> Result<Outcome> {
    let p = ModelParams::new(1.0, 1.0, 1.5, 0.0, 1.0)?;
    let sim = SimConfig::new(TV_DT, 8.0, MC_PATHS, SEED);
    let ts = [0.5, 1.0, 2.0, 4.0, 8.0];
    let r = tv_decay(
        (0.0, 0.0),
        (10.0, 10.0),
        &ts,
        &p,
        &sim,
        &BinningRule::default(),
        SeedPolicy::CommonRandomNumbers,
    )?;
    // one-bin noise: binomial standard deviation of the fullest bin's frequency
    let n = r.n_paths as f64;
    let monotone = r
        .tv_estimates
        .windows(2)
        .zip(&r.max_bin_counts[1..])
        .all(|(w, &c)| w[1] <= w[0] + (c as f64).sqrt() / n);
    let tvs: Vec<String> = r.tv_estimates.iter().map(|v| format!("{v:.4}")).collect();
    Ok(Outcome {
        pass: monotone && r.spearman < SPEARMAN_MAX,
        detail: format!(
            "tv [{}], spearman {:.3}, fitted rate {:.4}",
            tvs.join(", "),
            r.spearman,
            r.fit_rate
        ),
    })
}

fn c11_atom() -> Result<Outcome> {
    let p = ModelParams::alpha_root(0.0, 1.0, 1.5)?;
    let exact = atom_probability(1.0, 1.0, &p)?;
    let mut rels = Vec::new();
    for dt in DTS {
        let cfg = SimConfig::new(dt, 1.0, MC_PATHS, SEED);
        let (ys, _) = simulate_y_terminal(1.0, &p, &cfg)?;
        // absorbed paths sit exactly at zero
        let e = empirical_atom_of(&ys, f64::MIN_POSITIVE)?;
        rels.push((dt, e, (e - exact).abs() / exact));
    }
    let at_1e3 = rels[1].2;
    let improving = rels.windows(2).all(|w| w[1].2 <= w[0].2);
    let parts: Vec<String> = rels
        .iter()
        .map(|(dt, e, r)| format!("dt={dt:e}: {e:.5} ({:.1}%)", 100.0 * r))
        .collect();
    Ok(Outcome {
        pass: at_1e3 <= ATOM_REL_TOL && improving,
        detail: format!("exp(-y d)={exact:.5}; {}", parts.join(", ")),
    })
}

fn c12_determinism() -> Result<Outcome> {
    let dir = tempfile::tempdir().map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut all_same = true;
    let mut names = Vec::new();
    for command in Command::ALL {
        let mut cfg = RunConfig::new(command);
        cfg.seed = SEED;
        cfg.n_paths = DETERMINISM_PATHS;
        cfg.grid.n = 32;
        cfg.ts = vec![0.5, 1.0];
        if command == Command::LyapunovCheck {
            cfg.y0 = 10.0;
            cfg.x0 = 10.0;
            cfg.t = 2.0;
        }
        let mut outs = Vec::new();
        for k in 0..2 {
            let path = dir.path().join(format!("{command}-{k}.csv"));
            cfg.out = Some(path.clone());
            // a failed check still writes its artifact
            let _ = harness::run(&cfg);
            outs.push(std::fs::read(&path).unwrap_or_default());
        }
        let same = !outs[0].is_empty() && outs[0] == outs[1];
        all_same &= same;
        names.push(format!("{command}:{}", if same { "same" } else { "DIFFERENT" }));
    }
    Ok(Outcome {
        pass: all_same,
        detail: names.join(" "),
    })
}

fn main() {
    let mut ok = true;

    let s = Instant::now();
    ok &= report(1, "Riccati residual", s, c1_residual());
    let s = Instant::now();
    ok &= report(2, "flow property", s, c2_flow());

    let s = Instant::now();
    let ens = reference_ensembles();
    match &ens {
        Ok(e) => {
            ok &= report(3, "transform oracle vs Monte Carlo", s, c3_transform(e));
        }
        Err(err) => {
            ok &= report(3, "transform oracle vs Monte Carlo", s, Err(err.clone()));
        }
    }

    let s = Instant::now();
    ok &= report(4, "stable driver oracle", s, c4_driver());
    let s = Instant::now();
    ok &= report(5, "density normalisation and positivity", s, c5_normalisation());
    let s = Instant::now();
    ok &= report(6, "dual representation agreement", s, c6_dual());

    let s = Instant::now();
    let c7 = match &ens {
        Ok(e) => c7_histogram(&e[1].1),
        Err(err) => Err(err.clone()),
    };
    ok &= report(7, "density vs simulation histogram", s, c7);

    let s = Instant::now();
    ok &= report(8, "Lyapunov drift", s, c8_drift());
    let s = Instant::now();
    ok &= report(9, "growth exponents along rays", s, c9_exponents());
    let s = Instant::now();
    ok &= report(10, "TV decay", s, c10_tv());
    let s = Instant::now();
    ok &= report(11, "atom soft-check", s, c11_atom());
    let s = Instant::now();
    ok &= report(12, "determinism", s, c12_determinism());

    if !ok {
        std::process::exit(1);
    }
}
