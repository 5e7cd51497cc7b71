//! Empirical total-variation distance between two transient ensembles of
//! `(Y_t, X_t)`, estimated with a shared 2-D histogram.
//!
//! This bounds, up to a factor two, the distance of either ensemble to the
//! stationary law; it is a diagnostic for geometric decay, not an estimate
//! of the ergodicity constants.

use std::io::Write;

use crate::error::{Error, Result};
use crate::fmt::fmt_f64;
use crate::params::ModelParams;
use crate::sim::{simulate_pair, Record, SimConfig};
use crate::stats::{linear_fit, spearman};

/// How the random numbers of the second ensemble relate to the first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SeedPolicy {
    /// Both ensembles use the same seed, so path `i` of each shares its
    /// driver and Brownian increments.
    #[default]
    CommonRandomNumbers,
    /// The second ensemble uses a seed derived from the first.
    Independent,
}

impl std::fmt::Display for SeedPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SeedPolicy::CommonRandomNumbers => "common",
            SeedPolicy::Independent => "independent",
        })
    }
}

impl std::str::FromStr for SeedPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "common" => Ok(SeedPolicy::CommonRandomNumbers),
            "independent" => Ok(SeedPolicy::Independent),
            _ => Err(Error::InvalidArgument(format!(
                "seed policy must be common or independent, got {s}"
            ))),
        }
    }
}

/// Seed of the second ensemble under [`SeedPolicy::Independent`].
pub fn independent_seed(seed: u64) -> u64 {
    seed ^ 0x9E37_79B9_7F4A_7C15
}

/// Freedman-Diaconis binning of the pooled sample over its
/// `[trim, 1 - trim]` quantile range, with one overflow bin on each side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinningRule {
    /// Multiplies the Freedman-Diaconis bin count along each axis.
    pub refinement: usize,
    pub max_bins_per_axis: usize,
    pub trim: f64,
    /// Occupancy below which a warning is raised.
    pub sparse_count: u64,
}

impl Default for BinningRule {
    fn default() -> Self {
        Self {
            refinement: 1,
            max_bins_per_axis: 512,
            trim: 1e-3,
            sparse_count: 10,
        }
    }
}

impl BinningRule {
    pub fn refined(self, factor: usize) -> Self {
        Self {
            refinement: self.refinement * factor,
            ..self
        }
    }

    pub fn axis(&self, pooled: &[f64]) -> Result<AxisBins> {
        if pooled.len() < 2 {
            return Err(Error::InvalidArgument("need at least two samples to bin".into()));
        }
        if pooled.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite sample in histogram".into()));
        }
        let mut s = pooled.to_vec();
        s.sort_by(f64::total_cmp);
        let q = |p: f64| s[((s.len() - 1) as f64 * p).floor() as usize];
        let lo = q(self.trim);
        let hi = q(1.0 - self.trim);
        let iqr = q(0.75) - q(0.25);
        let cap = self.max_bins_per_axis.max(1);
        if !(hi > lo) {
            return Ok(AxisBins { lo, width: 1.0, n: 1 });
        }
        let base = if iqr > 0.0 {
            let fd = 2.0 * iqr * (s.len() as f64).powf(-1.0 / 3.0);
            ((hi - lo) / fd).ceil() as usize
        } else {
            1
        };
        let n = (base.max(1) * self.refinement.max(1)).min(cap);
        Ok(AxisBins {
            lo,
            width: (hi - lo) / n as f64,
            n,
        })
    }
}

/// `n` regular bins of `[lo, lo + n width)` plus the two overflow bins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisBins {
    pub lo: f64,
    pub width: f64,
    pub n: usize,
}

impl AxisBins {
    pub fn hi(&self) -> f64 {
        self.lo + self.width * self.n as f64
    }

    /// Index in `0..n + 2`; `0` and `n + 1` are the overflow bins.
    pub fn index(&self, v: f64) -> usize {
        if v < self.lo {
            0
        } else {
            let k = ((v - self.lo) / self.width).floor();
            if k >= self.n as f64 {
                self.n + 1
            } else {
                1 + k as usize
            }
        }
    }
}

/// Shared binning of one comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramSpec {
    pub y: AxisBins,
    pub x: AxisBins,
}

/// Plug-in estimate from one shared histogram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TvEstimate {
    /// `sum |p - q| / 2`.
    pub tv: f64,
    /// `sum sqrt((p + q) / n) / 2`, the scale of the estimator's noise.
    pub se_proxy: f64,
    pub spec: HistogramSpec,
    pub max_bin_count: u64,
    pub occupied_bins: usize,
}

/// TV between the empirical laws of `(ya, xa)` and `(yb, xb)`.
pub fn tv_histogram(
    ya: &[f64],
    xa: &[f64],
    yb: &[f64],
    xb: &[f64],
    rule: &BinningRule,
) -> Result<TvEstimate> {
    if ya.len() != xa.len() || yb.len() != xb.len() {
        return Err(Error::InvalidArgument("coordinate samples differ in length".into()));
    }
    if ya.is_empty() || yb.is_empty() {
        return Err(Error::InvalidArgument("empty ensemble".into()));
    }
    let pooled_y: Vec<f64> = ya.iter().chain(yb).copied().collect();
    let pooled_x: Vec<f64> = xa.iter().chain(xb).copied().collect();
    let spec = HistogramSpec {
        y: rule.axis(&pooled_y)?,
        x: rule.axis(&pooled_x)?,
    };
    let ny = spec.y.n + 2;
    let nx = spec.x.n + 2;
    let mut ca = vec![0u64; ny * nx];
    let mut cb = vec![0u64; ny * nx];
    for (y, x) in ya.iter().zip(xa) {
        ca[spec.y.index(*y) * nx + spec.x.index(*x)] += 1;
    }
    for (y, x) in yb.iter().zip(xb) {
        cb[spec.y.index(*y) * nx + spec.x.index(*x)] += 1;
    }
    let (na, nb) = (ya.len() as f64, yb.len() as f64);
    let n = na.min(nb);
    let mut tv = 0.0;
    let mut se = 0.0;
    let mut max_bin_count = 0;
    let mut occupied_bins = 0;
    for (&a, &b) in ca.iter().zip(&cb) {
        if a == 0 && b == 0 {
            continue;
        }
        occupied_bins += 1;
        max_bin_count = max_bin_count.max(a).max(b);
        let (p, q) = (a as f64 / na, b as f64 / nb);
        tv += (p - q).abs();
        se += ((p + q) / n).sqrt();
    }
    Ok(TvEstimate {
        tv: (0.5 * tv).min(1.0),
        se_proxy: 0.5 * se,
        spec,
        max_bin_count,
        occupied_bins,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TvDecayReport {
    pub ts: Vec<f64>,
    pub tv_estimates: Vec<f64>,
    pub se_proxy: Vec<f64>,
    /// Slope of `log TV` against `t`.
    pub fit_rate: f64,
    pub fit_intercept: f64,
    /// Spearman correlation of `(t, log TV)`.
    pub spearman: f64,
    pub initial_pair: [(f64, f64); 2],
    pub binning: BinningRule,
    /// The histogram used at each time.
    pub histograms: Vec<HistogramSpec>,
    pub max_bin_counts: Vec<u64>,
    pub n_paths: usize,
    pub seed_policy: SeedPolicy,
    pub warnings: Vec<String>,
}

impl TvDecayReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,tv,se_proxy")?;
        for i in 0..self.ts.len() {
            writeln!(
                w,
                "{},{},{}",
                fmt_f64(self.ts[i]),
                fmt_f64(self.tv_estimates[i]),
                fmt_f64(self.se_proxy[i])
            )?;
        }
        Ok(())
    }

    /// Whether each estimate exceeds its predecessor by at most `slack`.
    pub fn non_increasing_within(&self, slack: f64) -> bool {
        self.tv_estimates.windows(2).all(|w| w[1] <= w[0] + slack)
    }
}

/// Simulates both ensembles once up to `max(ts)`, recording every time in
/// `ts`, and estimates the TV distance at each of them. The horizon and
/// record settings of `sim` are overridden.
pub fn tv_decay(
    init_a: (f64, f64),
    init_b: (f64, f64),
    ts: &[f64],
    params: &ModelParams,
    sim: &SimConfig,
    binning: &BinningRule,
    policy: SeedPolicy,
) -> Result<TvDecayReport> {
    params.require_ergodic()?;
    if ts.is_empty() {
        return Err(Error::InvalidArgument("ts must not be empty".into()));
    }
    if ts.windows(2).any(|w| !(w[1] > w[0])) || !(ts[0] > 0.0) {
        return Err(Error::InvalidArgument("ts must be positive and strictly increasing".into()));
    }
    let horizon = *ts.last().unwrap();
    let cfg_a = SimConfig {
        horizon,
        record: Record::Times(ts.to_vec()),
        ..sim.clone()
    };
    let cfg_b = SimConfig {
        seed: match policy {
            SeedPolicy::CommonRandomNumbers => sim.seed,
            SeedPolicy::Independent => independent_seed(sim.seed),
        },
        ..cfg_a.clone()
    };
    let ea = simulate_pair(init_a.0, init_a.1, params, &cfg_a)?;
    let eb = simulate_pair(init_b.0, init_b.1, params, &cfg_b)?;

    let mut tv_estimates = Vec::with_capacity(ts.len());
    let mut se_proxy = Vec::with_capacity(ts.len());
    let mut histograms = Vec::with_capacity(ts.len());
    let mut max_bin_counts = Vec::with_capacity(ts.len());
    let mut warnings = Vec::new();
    // record 0 is the initial state
    for (i, &t) in ts.iter().enumerate() {
        let r = i + 1;
        let est = tv_histogram(ea.y_at(r), ea.x_at(r), eb.y_at(r), eb.x_at(r), binning)?;
        if est.max_bin_count < binning.sparse_count {
            warnings.push(format!(
                "sparse histogram at t={}: max bin count {} < {}",
                fmt_f64(t),
                est.max_bin_count,
                binning.sparse_count
            ));
        }
        tv_estimates.push(est.tv);
        se_proxy.push(est.se_proxy);
        histograms.push(est.spec);
        max_bin_counts.push(est.max_bin_count);
    }

    let floor = 0.5 / sim.n_paths as f64;
    let log_tv: Vec<f64> = tv_estimates.iter().map(|&v| v.max(floor).ln()).collect();
    let (fit_rate, fit_intercept) = if ts.len() >= 2 {
        let f = linear_fit(ts, &log_tv)?;
        (f.slope, f.intercept)
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(TvDecayReport {
        ts: ts.to_vec(),
        spearman: spearman(ts, &log_tv),
        tv_estimates,
        se_proxy,
        fit_rate,
        fit_intercept,
        initial_pair: [init_a, init_b],
        binning: *binning,
        histograms,
        max_bin_counts,
        n_paths: sim.n_paths,
        seed_policy: policy,
        warnings,
    })
}
