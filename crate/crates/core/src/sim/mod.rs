//! Jump-Euler simulation of `(Y, X)`.
//!
//! ```text
//! Y_{k+1} = max(0, Y_k + (a - b Y_k) dt + Y_k^{1/alpha} dL_k)
//! X_{k+1} = X_k + (m - theta X_k) dt + sqrt(Y_k dt) G_k
//! ```
//!
//! Every path owns two ChaCha8 streams derived from `(seed, path)`: stream
//! `2 path` feeds the driver and `2 path + 1` the Gaussian noise. Results
//! therefore do not depend on thread scheduling, and `Y` is identical
//! whether or not `X` is simulated.

pub mod stable;

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rand::Rng;
use rayon::prelude::*;

pub use stable::{levy_constant, sample_stable_increment, StableDriverSpec};

use crate::error::{Error, Result};
use crate::fmt::fmt_f64;
use crate::params::ModelParams;

/// Largest number of stored `(path, record)` entries per ensemble.
pub const MAX_STORED: usize = 20_000_000;

/// Random streams of one path.
pub struct PathRng {
    pub driver: ChaCha8Rng,
    pub noise: ChaCha8Rng,
}

impl PathRng {
    pub fn new(seed: u64, path: u64) -> Self {
        let mut driver = ChaCha8Rng::seed_from_u64(seed);
        driver.set_stream(2 * path);
        let mut noise = ChaCha8Rng::seed_from_u64(seed);
        noise.set_stream(2 * path + 1);
        Self { driver, noise }
    }
}

/// Which time slices of each path are kept.
#[derive(Debug, Clone, PartialEq)]
pub enum Record {
    /// Only the final state (plus the initial one).
    Terminal,
    /// Every `k`-th step, always including the first and the last.
    Stride(usize),
    /// The given times, which must be multiples of `dt` in `(0, horizon]`.
    Times(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub horizon: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub record: Record,
}

impl SimConfig {
    pub fn new(dt: f64, horizon: f64, n_paths: usize, seed: u64) -> Self {
        Self {
            dt,
            horizon,
            n_paths,
            seed,
            record: Record::Terminal,
        }
    }

    pub fn with_record(mut self, record: Record) -> Self {
        self.record = record;
        self
    }

    /// Every violated constraint, for the given model.
    pub fn violations(&self, params: &ModelParams) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.dt.is_finite() && self.dt > 0.0) {
            out.push("dt must be finite and positive".to_string());
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            out.push("horizon must be finite and positive".to_string());
        }
        if out.is_empty() {
            if self.dt > self.horizon {
                out.push("dt must not exceed the horizon".to_string());
            } else if step_count(self.horizon, self.dt).is_none() {
                out.push("horizon must be an integer multiple of dt".to_string());
            }
            if 1.0 - params.b * self.dt < 0.0 {
                out.push("dt too large: 1 - b dt must be nonnegative".to_string());
            }
        }
        if self.n_paths == 0 {
            out.push("n_paths must be at least 1".to_string());
        }
        if let Record::Stride(0) = self.record {
            out.push("record stride must be positive".to_string());
        }
        out
    }

    pub fn validate(&self, params: &ModelParams) -> Result<()> {
        let v = self.violations(params);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(v.join("; ")))
        }
    }

    pub fn n_steps(&self) -> Result<usize> {
        step_count(self.horizon, self.dt).ok_or_else(|| {
            Error::InvalidArgument("horizon must be an integer multiple of dt".into())
        })
    }

    /// Step indices that are recorded, increasing, starting at 0.
    pub fn record_steps(&self) -> Result<Vec<usize>> {
        let n = self.n_steps()?;
        let mut steps = match &self.record {
            Record::Terminal => vec![0, n],
            Record::Stride(k) => {
                let mut s: Vec<usize> = (0..=n).step_by((*k).max(1)).collect();
                if *s.last().unwrap() != n {
                    s.push(n);
                }
                s
            }
            Record::Times(ts) => {
                let mut s = vec![0];
                for &t in ts {
                    let k = step_count(t, self.dt)
                        .filter(|&k| k <= n && t > 0.0)
                        .ok_or_else(|| {
                            Error::InvalidArgument(format!(
                                "record time {t} is not a multiple of dt in (0, horizon]"
                            ))
                        })?;
                    s.push(k);
                }
                s
            }
        };
        steps.sort_unstable();
        steps.dedup();
        Ok(steps)
    }
}

fn step_count(horizon: f64, dt: f64) -> Option<usize> {
    let r = horizon / dt;
    let n = r.round();
    if n >= 1.0 && (r - n).abs() <= 1e-9 * n.max(1.0) {
        Some(n as usize)
    } else if horizon == 0.0 {
        Some(0)
    } else {
        None
    }
}

/// Simulated paths of `(Y, X)`, stored record-major: entry `(r, p)` is at
/// `r * n_paths + p`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    pub dt: f64,
    pub n_steps: usize,
    pub n_paths: usize,
    pub seed: u64,
    pub params: ModelParams,
    pub y0: f64,
    pub x0: f64,
    pub steps: Vec<usize>,
    pub y: Vec<f64>,
    pub x: Vec<f64>,
    /// Number of steps where the positive-part projection was active.
    pub projections: u64,
}

impl PathEnsemble {
    pub fn n_records(&self) -> usize {
        self.steps.len()
    }

    pub fn times(&self) -> Vec<f64> {
        self.steps.iter().map(|&k| k as f64 * self.dt).collect()
    }

    pub fn y_at(&self, record: usize) -> &[f64] {
        &self.y[record * self.n_paths..(record + 1) * self.n_paths]
    }

    pub fn x_at(&self, record: usize) -> &[f64] {
        &self.x[record * self.n_paths..(record + 1) * self.n_paths]
    }

    pub fn terminal_y(&self) -> &[f64] {
        self.y_at(self.n_records() - 1)
    }

    pub fn terminal_x(&self) -> &[f64] {
        self.x_at(self.n_records() - 1)
    }

    /// Writes `path,step,t,y,x` rows, path-major.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "path,step,t,y,x")?;
        let times = self.times();
        for p in 0..self.n_paths {
            for (r, &k) in self.steps.iter().enumerate() {
                let i = r * self.n_paths + p;
                writeln!(
                    w,
                    "{p},{k},{},{},{}",
                    fmt_f64(times[r]),
                    fmt_f64(self.y[i]),
                    fmt_f64(self.x[i])
                )?;
            }
        }
        Ok(())
    }

    /// Writes `t,mean_y,mean_x,var_x` rows, one per record.
    pub fn write_summary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,mean_y,mean_x,var_x")?;
        for (r, t) in self.times().into_iter().enumerate() {
            let (my, mx, vx) = slice_moments(self.y_at(r), self.x_at(r));
            writeln!(w, "{},{},{},{}", fmt_f64(t), fmt_f64(my), fmt_f64(mx), fmt_f64(vx))?;
        }
        Ok(())
    }
}

fn slice_moments(y: &[f64], x: &[f64]) -> (f64, f64, f64) {
    let n = y.len() as f64;
    let my = y.iter().sum::<f64>() / n;
    let mx = x.iter().sum::<f64>() / n;
    let vx = if y.len() > 1 {
        x.iter().map(|v| (v - mx).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (my, mx, vx)
}

#[derive(Clone, Copy)]
struct Stepper {
    a: f64,
    b: f64,
    m: f64,
    theta: f64,
    inv_alpha: f64,
    dt: f64,
    sqrt_dt: f64,
    dl_scale: f64,
    driver: StableDriverSpec,
}

impl Stepper {
    fn new(params: &ModelParams, dt: f64) -> Result<Self> {
        let driver = StableDriverSpec::new(params.alpha)?;
        Ok(Self {
            a: params.a,
            b: params.b,
            m: params.m,
            theta: params.theta,
            inv_alpha: 1.0 / params.alpha,
            dt,
            sqrt_dt: dt.sqrt(),
            dl_scale: dt.powf(1.0 / params.alpha) * driver.scale_per_unit_time,
            driver,
        })
    }

    /// Advances `y`; returns the new value and whether it was projected.
    #[inline]
    fn step_y(&self, y: f64, rng: &mut ChaCha8Rng) -> (f64, bool) {
        let dl = self.dl_scale * self.driver.standard(rng);
        let next = y + (self.a - self.b * y) * self.dt + y.powf(self.inv_alpha) * dl;
        if next < 0.0 {
            (0.0, true)
        } else {
            (next, false)
        }
    }

    #[inline]
    fn step_x(&self, x: f64, y_before: f64, rng: &mut ChaCha8Rng) -> f64 {
        let g: f64 = rng.sample(StandardNormal);
        x + (self.m - self.theta * x) * self.dt + (y_before.max(0.0)).sqrt() * self.sqrt_dt * g
    }
}

fn check_start(y0: f64, x0: f64) -> Result<()> {
    if !(y0.is_finite() && y0 >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "y0 must be finite and nonnegative, got {y0}"
        )));
    }
    if !x0.is_finite() {
        return Err(Error::InvalidArgument(format!("x0 must be finite, got {x0}")));
    }
    Ok(())
}

/// Simulates `n_paths` independent paths of `(Y, X)` from `(y0, x0)`.
pub fn simulate_pair(y0: f64, x0: f64, params: &ModelParams, cfg: &SimConfig) -> Result<PathEnsemble> {
    params.validate()?;
    cfg.validate(params)?;
    check_start(y0, x0)?;
    let n_steps = cfg.n_steps()?;
    let steps = cfg.record_steps()?;
    let n_rec = steps.len();
    if n_rec.saturating_mul(cfg.n_paths) > MAX_STORED {
        return Err(Error::InvalidArgument(format!(
            "{} paths x {} records exceeds the storage cap of {MAX_STORED}; record fewer slices",
            cfg.n_paths, n_rec
        )));
    }
    let stepper = Stepper::new(params, cfg.dt)?;

    let per_path: Vec<(Vec<f64>, Vec<f64>, u64)> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|p| {
            let mut rng = PathRng::new(cfg.seed, p as u64);
            let mut ys = Vec::with_capacity(n_rec);
            let mut xs = Vec::with_capacity(n_rec);
            let (mut y, mut x) = (y0, x0);
            let mut projected = 0u64;
            let mut next = 0;
            for k in 0..=n_steps {
                if next < n_rec && steps[next] == k {
                    ys.push(y);
                    xs.push(x);
                    next += 1;
                }
                if k == n_steps {
                    break;
                }
                let (ny, proj) = stepper.step_y(y, &mut rng.driver);
                x = stepper.step_x(x, y, &mut rng.noise);
                y = ny;
                projected += proj as u64;
            }
            (ys, xs, projected)
        })
        .collect();

    let mut y = vec![0.0; n_rec * cfg.n_paths];
    let mut x = vec![0.0; n_rec * cfg.n_paths];
    let mut projections = 0;
    for (p, (ys, xs, proj)) in per_path.into_iter().enumerate() {
        for r in 0..n_rec {
            y[r * cfg.n_paths + p] = ys[r];
            x[r * cfg.n_paths + p] = xs[r];
        }
        projections += proj;
    }
    Ok(PathEnsemble {
        dt: cfg.dt,
        n_steps,
        n_paths: cfg.n_paths,
        seed: cfg.seed,
        params: *params,
        y0,
        x0,
        steps,
        y,
        x,
        projections,
    })
}

/// Terminal values of `Y` only, with the projection count. Uses the same
/// driver streams as [`simulate_pair`], so the values coincide with its
/// terminal `Y`.
pub fn simulate_y_terminal(y0: f64, params: &ModelParams, cfg: &SimConfig) -> Result<(Vec<f64>, u64)> {
    params.validate()?;
    cfg.validate(params)?;
    check_start(y0, 0.0)?;
    let n_steps = cfg.n_steps()?;
    let stepper = Stepper::new(params, cfg.dt)?;
    let out: Vec<(f64, u64)> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|p| {
            let mut rng = PathRng::new(cfg.seed, p as u64);
            let mut y = y0;
            let mut projected = 0u64;
            for _ in 0..n_steps {
                let (ny, proj) = stepper.step_y(y, &mut rng.driver);
                y = ny;
                projected += proj as u64;
            }
            (y, projected)
        })
        .collect();
    let projections = out.iter().map(|o| o.1).sum();
    Ok((out.into_iter().map(|o| o.0).collect(), projections))
}

/// Fraction of terminal values below `threshold`.
pub fn empirical_atom(ensemble: &PathEnsemble, threshold: f64) -> Result<f64> {
    if ensemble.params.a != 0.0 {
        return Err(Error::InvalidParams(
            "empirical atom requires an a = 0 ensemble".into(),
        ));
    }
    empirical_atom_of(ensemble.terminal_y(), threshold)
}

/// Fraction of `ys` below `threshold`.
pub fn empirical_atom_of(ys: &[f64], threshold: f64) -> Result<f64> {
    if !(threshold > 0.0) {
        return Err(Error::InvalidArgument("threshold must be positive".into()));
    }
    if ys.is_empty() {
        return Err(Error::InvalidArgument("no samples".into()));
    }
    Ok(ys.iter().filter(|&&y| y < threshold).count() as f64 / ys.len() as f64)
}
