//! Reproducible experiment runs behind the command-line tool.
//!
//! A [`RunConfig`] is a flat set of `key=value` pairs. Every artifact starts
//! with `#` comment lines holding the library version and the resolved
//! configuration (without the output path), followed by result summaries and
//! the CSV body.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use crate::bounds::{ray_exponent_fit, geometric_grid, Regime};
use crate::density::{cdf_many, density_grid, Representation};
use crate::error::Error;
use crate::fmt::{fmt_f64, fmt_list};
use crate::lyapunov::{certify_on_grid, choose_beta_c_m, drift_mc_check, DriftCheck, SmoothAbs};
use crate::params::{ModelParams, QuadratureConfig};
use crate::sim::{simulate_pair, Record, SimConfig};
use crate::transforms::{laplace_y, mean_y};
use crate::tv::{tv_decay, BinningRule, SeedPolicy};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Environment variable that replaces the default seed.
pub const SEED_ENV: &str = "ALPHA_ROOT_SEED";
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Laplace,
    Density,
    Cdf,
    Simulate,
    LyapunovCheck,
    TvDecay,
    BoundsCheck,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Laplace,
        Command::Density,
        Command::Cdf,
        Command::Simulate,
        Command::LyapunovCheck,
        Command::TvDecay,
        Command::BoundsCheck,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Command::Laplace => "laplace",
            Command::Density => "density",
            Command::Cdf => "cdf",
            Command::Simulate => "simulate",
            Command::LyapunovCheck => "lyapunov-check",
            Command::TvDecay => "tv-decay",
            Command::BoundsCheck => "bounds-check",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown command {s:?}"))
    }
}

/// `lo:hi:n`, `n` points including both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn linear(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.lo];
        }
        let h = (self.hi - self.lo) / (self.n - 1) as f64;
        (0..self.n)
            .map(|i| if i + 1 == self.n { self.hi } else { self.lo + h * i as f64 })
            .collect()
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", fmt_f64(self.lo), fmt_f64(self.hi), self.n)
    }
}

impl FromStr for GridSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("grid {s:?} must look like lo:hi:n"));
        }
        Ok(GridSpec {
            lo: parse_f64(parts[0])?,
            hi: parse_f64(parts[1])?,
            n: parts[2]
                .trim()
                .parse()
                .map_err(|_| format!("grid point count {:?} is not an integer", parts[2]))?,
        })
    }
}

/// What `simulate` writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimOutput {
    Paths,
    Summary,
}

impl fmt::Display for SimOutput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SimOutput::Paths => "paths",
            SimOutput::Summary => "summary",
        })
    }
}

impl FromStr for SimOutput {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "paths" => Ok(SimOutput::Paths),
            "summary" => Ok(SimOutput::Summary),
            _ => Err(format!("output must be paths or summary, got {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub params: ModelParams,
    pub quad: QuadratureConfig,
    /// Horizon of every experiment except `tv-decay`.
    pub t: f64,
    pub y0: f64,
    pub x0: f64,
    pub lambdas: Vec<f64>,
    pub grid: GridSpec,
    pub representation: Representation,
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
    /// `None` records the terminal slice only, `Some(k)` every `k`-th step.
    pub record_stride: Option<usize>,
    pub output: SimOutput,
    pub init_a: (f64, f64),
    pub init_b: (f64, f64),
    pub ts: Vec<f64>,
    pub seed_policy: SeedPolicy,
    pub bin_refinement: usize,
    pub angle: f64,
    /// Geometric, `lo:hi:n`.
    pub rho_grid: GridSpec,
    /// `None` writes to standard output.
    pub out: Option<PathBuf>,
}

/// Keys in serialisation order.
pub const KEYS: [&str; 29] = [
    "command",
    "a",
    "b",
    "alpha",
    "m",
    "theta",
    "abs_tol",
    "rel_tol",
    "max_subdivisions",
    "xi_truncation",
    "t",
    "y0",
    "x0",
    "lambdas",
    "grid",
    "representation",
    "dt",
    "paths",
    "seed",
    "record",
    "output",
    "init_a",
    "init_b",
    "ts",
    "seed_policy",
    "bin_refinement",
    "angle",
    "rho_grid",
    "out",
];

/// The seed used when none is configured: `ALPHA_ROOT_SEED` if set, else 42.
pub fn default_seed() -> Result<u64, String> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| format!("{SEED_ENV}={s:?} is not an unsigned integer")),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            params: ModelParams {
                a: 1.0,
                b: 1.0,
                alpha: 1.5,
                m: 0.0,
                theta: 1.0,
            },
            quad: QuadratureConfig::default(),
            t: 1.0,
            y0: 1.0,
            x0: 0.0,
            lambdas: vec![0.5, 1.0, 2.0],
            grid: GridSpec {
                lo: 0.0,
                hi: 20.0,
                n: 512,
            },
            representation: Representation::Fourier,
            dt: 0.01,
            n_paths: 10_000,
            seed: DEFAULT_SEED,
            record_stride: None,
            output: SimOutput::Paths,
            init_a: (0.0, 0.0),
            init_b: (10.0, 10.0),
            ts: vec![0.5, 1.0, 2.0, 4.0, 8.0],
            seed_policy: SeedPolicy::CommonRandomNumbers,
            bin_refinement: 1,
            angle: std::f64::consts::FRAC_PI_2,
            rho_grid: GridSpec {
                lo: 1e6,
                hi: 1e12,
                n: 7,
            },
            out: None,
        }
    }

    /// Defaults with the seed taken from the environment.
    pub fn from_env(command: Command) -> Result<Self, String> {
        let mut c = Self::new(command);
        c.seed = default_seed()?;
        Ok(c)
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let v = value.trim();
        let bad = |e: String| format!("{key}: {e}");
        match key {
            "command" => self.command = v.parse().map_err(bad)?,
            "a" => self.params.a = parse_f64(v).map_err(bad)?,
            "b" => self.params.b = parse_f64(v).map_err(bad)?,
            "alpha" => self.params.alpha = parse_f64(v).map_err(bad)?,
            "m" => self.params.m = parse_f64(v).map_err(bad)?,
            "theta" => self.params.theta = parse_f64(v).map_err(bad)?,
            "abs_tol" => self.quad.abs_tol = parse_f64(v).map_err(bad)?,
            "rel_tol" => self.quad.rel_tol = parse_f64(v).map_err(bad)?,
            "max_subdivisions" => self.quad.max_subdivisions = parse_usize(v).map_err(bad)?,
            "xi_truncation" => self.quad.xi_truncation = parse_f64(v).map_err(bad)?,
            "t" => self.t = parse_f64(v).map_err(bad)?,
            "y0" => self.y0 = parse_f64(v).map_err(bad)?,
            "x0" => self.x0 = parse_f64(v).map_err(bad)?,
            "lambdas" => self.lambdas = parse_list(v).map_err(bad)?,
            "grid" => self.grid = v.parse().map_err(bad)?,
            "representation" => {
                self.representation = v.parse().map_err(|e: Error| bad(e.to_string()))?
            }
            "dt" => self.dt = parse_f64(v).map_err(bad)?,
            "paths" => self.n_paths = parse_usize(v).map_err(bad)?,
            "seed" => {
                self.seed = v
                    .parse()
                    .map_err(|_| bad(format!("{v:?} is not an unsigned integer")))?
            }
            "record" => self.record_stride = parse_record(v).map_err(bad)?,
            "output" => self.output = v.parse().map_err(bad)?,
            "init_a" => self.init_a = parse_pair(v).map_err(bad)?,
            "init_b" => self.init_b = parse_pair(v).map_err(bad)?,
            "ts" => self.ts = parse_list(v).map_err(bad)?,
            "seed_policy" => {
                self.seed_policy = v.parse().map_err(|e: Error| bad(e.to_string()))?
            }
            "bin_refinement" => self.bin_refinement = parse_usize(v).map_err(bad)?,
            "angle" => self.angle = parse_angle(v).map_err(bad)?,
            "rho_grid" => self.rho_grid = v.parse().map_err(bad)?,
            "out" => self.out = if v.is_empty() || v == "-" { None } else { Some(PathBuf::from(v)) },
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "command" => self.command.to_string(),
            "a" => fmt_f64(self.params.a),
            "b" => fmt_f64(self.params.b),
            "alpha" => fmt_f64(self.params.alpha),
            "m" => fmt_f64(self.params.m),
            "theta" => fmt_f64(self.params.theta),
            "abs_tol" => fmt_f64(self.quad.abs_tol),
            "rel_tol" => fmt_f64(self.quad.rel_tol),
            "max_subdivisions" => self.quad.max_subdivisions.to_string(),
            "xi_truncation" => fmt_f64(self.quad.xi_truncation),
            "t" => fmt_f64(self.t),
            "y0" => fmt_f64(self.y0),
            "x0" => fmt_f64(self.x0),
            "lambdas" => fmt_list(&self.lambdas),
            "grid" => self.grid.to_string(),
            "representation" => self.representation.to_string(),
            "dt" => fmt_f64(self.dt),
            "paths" => self.n_paths.to_string(),
            "seed" => self.seed.to_string(),
            "record" => match self.record_stride {
                None => "terminal".to_string(),
                Some(k) => format!("stride:{k}"),
            },
            "output" => self.output.to_string(),
            "init_a" => fmt_list(&[self.init_a.0, self.init_a.1]),
            "init_b" => fmt_list(&[self.init_b.0, self.init_b.1]),
            "ts" => fmt_list(&self.ts),
            "seed_policy" => self.seed_policy.to_string(),
            "bin_refinement" => self.bin_refinement.to_string(),
            "angle" => fmt_f64(self.angle),
            "rho_grid" => self.rho_grid.to_string(),
            "out" => match &self.out {
                None => "-".to_string(),
                Some(p) => p.display().to_string(),
            },
            _ => return None,
        })
    }

    /// Parses `key=value` lines over the defaults of `base`. Blank lines and
    /// lines starting with `#` are skipped; every problem is reported.
    pub fn parse_onto(mut base: RunConfig, text: &str) -> Result<RunConfig, Vec<String>> {
        let mut errors = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match line.split_once('=') {
                Some((k, v)) => {
                    if let Err(e) = base.set(k.trim(), v) {
                        errors.push(format!("line {}: {e}", i + 1));
                    }
                }
                None => errors.push(format!("line {}: expected key=value", i + 1)),
            }
        }
        if errors.is_empty() {
            Ok(base)
        } else {
            Err(errors)
        }
    }

    /// Parses a file that must name its command.
    pub fn parse(text: &str) -> Result<RunConfig, Vec<String>> {
        let command = text
            .lines()
            .filter_map(|l| l.trim().split_once('='))
            .find(|(k, _)| k.trim() == "command")
            .map(|(_, v)| v.trim().to_string())
            .ok_or_else(|| vec!["missing key \"command\"".to_string()])?;
        let command: Command = command.parse().map_err(|e| vec![e])?;
        let base = RunConfig::from_env(command).map_err(|e| vec![e])?;
        Self::parse_onto(base, text)
    }

    /// One `key=value` line per key, in [`KEYS`] order.
    pub fn serialize(&self) -> String {
        self.lines(&KEYS).into_iter().map(|l| l + "\n").collect()
    }

    fn lines(&self, keys: &[&str]) -> Vec<String> {
        keys.iter()
            .map(|k| format!("{k}={}", self.get(k).unwrap()))
            .collect()
    }

    pub fn sim_config(&self, horizon: f64) -> SimConfig {
        let cfg = SimConfig::new(self.dt, horizon, self.n_paths, self.seed);
        match self.record_stride {
            None => cfg,
            Some(k) => cfg.with_record(Record::Stride(k)),
        }
    }

    pub fn binning(&self) -> BinningRule {
        BinningRule::default().refined(self.bin_refinement)
    }
}

fn parse_f64(s: &str) -> Result<f64, String> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| format!("{s:?} is not a number"))
}

fn parse_usize(s: &str) -> Result<usize, String> {
    s.trim()
        .parse::<usize>()
        .map_err(|_| format!("{s:?} is not a nonnegative integer"))
}

/// `0.5,1,2`.
pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(parse_f64).collect()
}

/// `y,x`.
pub fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    match parse_list(s)?.as_slice() {
        [y, x] => Ok((*y, *x)),
        _ => Err(format!("{s:?} must be a pair y,x")),
    }
}

fn parse_record(s: &str) -> Result<Option<usize>, String> {
    if s == "terminal" {
        return Ok(None);
    }
    match s.strip_prefix("stride:") {
        Some(k) => Ok(Some(parse_usize(k)?)),
        None => Err(format!("record must be terminal or stride:K, got {s:?}")),
    }
}

/// A number, or a multiple of `pi` such as `pi/2`, `-3pi/4`, `3*pi/4`.
pub fn parse_angle(s: &str) -> Result<f64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let Some(pos) = t.find("pi") else {
        return parse_f64(&t);
    };
    let err = || format!("cannot parse angle {s:?}");
    let coef = match t[..pos].trim_end_matches('*') {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().map_err(|_| err())?,
    };
    let rest = &t[pos + 2..];
    let den = if rest.is_empty() {
        1.0
    } else {
        rest.strip_prefix('/')
            .and_then(|d| d.parse::<f64>().ok())
            .ok_or_else(err)?
    };
    Ok(coef * std::f64::consts::PI / den)
}

/// Every invariant the configuration violates; empty when valid.
pub fn validate(cfg: &RunConfig) -> Vec<String> {
    let mut out = cfg.params.violations();
    out.extend(cfg.quad.violations());
    let name = cfg.command.name();
    let positive_t = |out: &mut Vec<String>| {
        if !(cfg.t.is_finite() && cfg.t > 0.0) {
            out.push("t must be finite and positive".into());
        }
    };
    let start = |out: &mut Vec<String>| {
        if !(cfg.y0.is_finite() && cfg.y0 >= 0.0) {
            out.push("y0 must be finite and nonnegative".into());
        }
    };
    match cfg.command {
        Command::Laplace => {
            positive_t(&mut out);
            start(&mut out);
            if cfg.lambdas.is_empty() {
                out.push("lambdas must not be empty".into());
            }
            if cfg.lambdas.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
                out.push("lambdas must be finite and nonnegative".into());
            }
        }
        Command::Density | Command::Cdf => {
            if !(cfg.params.a > 0.0) {
                out.push(format!("{name} requires a > 0"));
            }
            positive_t(&mut out);
            start(&mut out);
            let g = cfg.grid;
            if !(g.lo.is_finite() && g.hi.is_finite() && g.lo >= 0.0 && g.hi > g.lo && g.n >= 2) {
                out.push("grid must satisfy 0 <= lo < hi with at least 2 points".into());
            }
            if cfg.command == Command::Density && cfg.representation == Representation::RealAxis {
                if cfg.y0 != 0.0 {
                    out.push("real_axis representation requires y0 = 0".into());
                }
                if !(g.lo > 0.0) {
                    out.push("real_axis representation requires grid lo > 0".into());
                }
            }
        }
        Command::Simulate => {
            positive_t(&mut out);
            start(&mut out);
            if !cfg.x0.is_finite() {
                out.push("x0 must be finite".into());
            }
            if cfg.t.is_finite() && cfg.t > 0.0 {
                out.extend(cfg.sim_config(cfg.t).violations(&cfg.params));
            }
        }
        Command::LyapunovCheck => {
            if !(cfg.params.theta > 0.0) {
                out.push(format!("{name} requires theta > 0"));
            }
            positive_t(&mut out);
            start(&mut out);
            if cfg.t.is_finite() && cfg.t > 0.0 {
                out.extend(cfg.sim_config(cfg.t).violations(&cfg.params));
            }
        }
        Command::TvDecay => {
            if !(cfg.params.theta > 0.0) {
                out.push(format!("{name} requires theta > 0"));
            }
            if cfg.ts.is_empty() || cfg.ts.windows(2).any(|w| !(w[1] > w[0])) || !(cfg.ts[0] > 0.0) {
                out.push("ts must be positive and strictly increasing".into());
            } else {
                let horizon = *cfg.ts.last().unwrap();
                let sim = cfg
                    .sim_config(horizon)
                    .with_record(Record::Times(cfg.ts.clone()));
                out.extend(sim.violations(&cfg.params));
                if let Err(e) = sim.record_steps() {
                    out.push(e.to_string());
                }
            }
            for (y, x) in [cfg.init_a, cfg.init_b] {
                if !(y.is_finite() && y >= 0.0 && x.is_finite()) {
                    out.push("initial states need finite y >= 0 and finite x".into());
                }
            }
            if cfg.bin_refinement == 0 {
                out.push("bin_refinement must be positive".into());
            }
        }
        Command::BoundsCheck => {
            positive_t(&mut out);
            if let Err(e) = Regime::for_angle(cfg.angle) {
                out.push(e.to_string());
            }
            let g = cfg.rho_grid;
            if !(g.lo >= 2.0 && g.hi > g.lo && g.hi.is_finite() && g.n >= 2) {
                out.push("rho_grid must satisfy 2 <= lo < hi with at least 2 points".into());
            }
        }
    }
    out
}

/// Exit status of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok = 0,
    Io = 1,
    Validation = 2,
    Quadrature = 3,
    CheckFailed = 4,
    Numerical = 5,
}

impl Status {
    pub fn code(self) -> i32 {
        self as i32
    }

    pub fn kind(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Io => "io",
            Status::Validation => "validation",
            Status::Quadrature => "quadrature",
            Status::CheckFailed => "check",
            Status::Numerical => "numerical",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub status: Status,
    pub message: String,
}

impl fmt::Display for Failure {
    /// `error=<kind> <message>` on a single line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg: String = self
            .message
            .chars()
            .map(|c| if c == '\n' || c == '\r' { ' ' } else { c })
            .collect();
        write!(f, "error={} {msg}", self.status.kind())
    }
}

impl Failure {
    fn validation(msgs: Vec<String>) -> Self {
        Failure {
            status: Status::Validation,
            message: msgs.join("; "),
        }
    }

    fn io(e: std::io::Error) -> Self {
        Failure {
            status: Status::Io,
            message: e.to_string(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match root(&e) {
            Error::InvalidParams(_) | Error::InvalidArgument(_) => Status::Validation,
            Error::Quadrature { .. } | Error::Truncation { .. } => Status::Quadrature,
            _ => Status::Numerical,
        };
        Failure {
            status,
            message: e.to_string(),
        }
    }
}

fn root(e: &Error) -> &Error {
    match e {
        Error::AtAbscissa { source, .. } => root(source),
        e => e,
    }
}

/// Result of a successful run.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    /// The full file contents, header included.
    pub bytes: Vec<u8>,
    /// Summary values, also written to the header.
    pub summary: Vec<(String, String)>,
    /// `false` when a check command found a violation.
    pub passed: bool,
}

impl Artifact {
    pub fn summary_value(&self, key: &str) -> Option<&str> {
        self.summary
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

/// Runs the experiment and renders the artifact without touching the
/// file system.
pub fn render(cfg: &RunConfig) -> Result<Artifact, Failure> {
    let v = validate(cfg);
    if !v.is_empty() {
        return Err(Failure::validation(v));
    }
    let mut body = Vec::new();
    let mut summary: Vec<(String, String)> = Vec::new();
    let mut passed = true;
    let p = &cfg.params;
    let q = &cfg.quad;
    let io = Failure::io;
    match cfg.command {
        Command::Laplace => {
            writeln!(body, "lambda,laplace").map_err(io)?;
            for &l in &cfg.lambdas {
                let v = laplace_y(cfg.t, cfg.y0, l, p, q)?;
                writeln!(body, "{},{}", fmt_f64(l), fmt_f64(v)).map_err(io)?;
            }
            summary.push(("mean_y".into(), fmt_f64(mean_y(cfg.t, cfg.y0, p)?)));
        }
        Command::Density => {
            let g = density_grid(cfg.t, cfg.y0, &cfg.grid.linear(), p, q, cfg.representation)?;
            summary.push(("norm_defect".into(), fmt_f64(g.norm_defect)));
            summary.push(("trapezoid".into(), fmt_f64(g.trapezoid())));
            summary.push(("boundary_point".into(), g.boundary_point.to_string()));
            g.write_csv(&mut body).map_err(io)?;
        }
        Command::Cdf => {
            let xs = cfg.grid.linear();
            let cs = cdf_many(cfg.t, cfg.y0, &xs, p, q)?;
            writeln!(body, "x,cdf").map_err(io)?;
            for (x, c) in xs.iter().zip(&cs) {
                writeln!(body, "{},{}", fmt_f64(*x), fmt_f64(*c)).map_err(io)?;
            }
        }
        Command::Simulate => {
            let ens = simulate_pair(cfg.y0, cfg.x0, p, &cfg.sim_config(cfg.t))?;
            summary.push(("projections".into(), ens.projections.to_string()));
            match cfg.output {
                SimOutput::Paths => ens.write_csv(&mut body).map_err(io)?,
                SimOutput::Summary => ens.write_summary(&mut body).map_err(io)?,
            }
        }
        Command::LyapunovCheck => {
            let (spec, cert) = choose_beta_c_m(p, SmoothAbs)?;
            let grid_max = certify_on_grid(&spec, p, 50.0, 50.0, 200);
            let check = drift_mc_check(cfg.y0, cfg.x0, cfg.t, &spec, p, &cfg.sim_config(cfg.t))?;
            let certified = cert.y_coefficient <= 0.0 && grid_max <= 0.0;
            passed = certified && check.pass;
            summary.extend([
                ("beta".into(), fmt_f64(spec.beta)),
                ("c".into(), fmt_f64(spec.c)),
                ("M".into(), fmt_f64(spec.m_bound)),
                ("y_coefficient".into(), fmt_f64(cert.y_coefficient)),
                ("grid_max".into(), fmt_f64(grid_max)),
                ("se".into(), fmt_f64(check.se)),
                ("allowance".into(), fmt_f64(check.allowance)),
                ("certified".into(), certified.to_string()),
            ]);
            DriftCheck::write_csv(&[check], &mut body).map_err(io)?;
        }
        Command::TvDecay => {
            let sim = cfg.sim_config(*cfg.ts.last().unwrap());
            let r = tv_decay(cfg.init_a, cfg.init_b, &cfg.ts, p, &sim, &cfg.binning(), cfg.seed_policy)?;
            summary.push(("fit_rate".into(), fmt_f64(r.fit_rate)));
            summary.push(("fit_intercept".into(), fmt_f64(r.fit_intercept)));
            summary.push(("spearman".into(), fmt_f64(r.spearman)));
            let bins: Vec<String> = r
                .histograms
                .iter()
                .map(|h| format!("{}x{}", h.y.n, h.x.n))
                .collect();
            summary.push(("bins".into(), bins.join(",")));
            let counts: Vec<String> = r.max_bin_counts.iter().map(|c| c.to_string()).collect();
            summary.push(("max_bin_counts".into(), counts.join(",")));
            for w in &r.warnings {
                summary.push(("warning".into(), w.clone()));
            }
            r.write_csv(&mut body).map_err(io)?;
        }
        Command::BoundsCheck => {
            let g = cfg.rho_grid;
            let rhos = geometric_grid(g.lo, g.hi, g.n)?;
            let f = ray_exponent_fit(cfg.t, p, cfg.angle, &rhos, q)?;
            summary.push((
                "regime".into(),
                match f.regime {
                    Regime::RealPart => "real_part",
                    Regime::Modulus => "modulus",
                }
                .into(),
            ));
            summary.push(("slope".into(), fmt_f64(f.slope)));
            summary.push(("intercept".into(), fmt_f64(f.intercept)));
            summary.push(("slope_se".into(), fmt_f64(f.slope_se)));
            summary.push(("expected_slope".into(), fmt_f64(2.0 - p.alpha)));
            writeln!(body, "rho,value,ratio").map_err(io)?;
            for ((r, v), q) in f.rhos.iter().zip(&f.values).zip(f.ratios(p.alpha)) {
                writeln!(body, "{},{},{}", fmt_f64(*r), fmt_f64(*v), fmt_f64(q)).map_err(io)?;
            }
        }
    }

    let mut bytes = Vec::new();
    writeln!(bytes, "# alpha-root {VERSION}").map_err(io)?;
    let keys: Vec<&str> = KEYS.iter().copied().filter(|&k| k != "out").collect();
    for line in cfg.lines(&keys) {
        writeln!(bytes, "# {line}").map_err(io)?;
    }
    for (k, v) in &summary {
        writeln!(bytes, "# {k}={v}").map_err(io)?;
    }
    bytes.extend(body);
    Ok(Artifact {
        bytes,
        summary,
        passed,
    })
}

/// Renders the artifact and writes it to `cfg.out` or standard output.
/// A failed check still writes its artifact.
pub fn run(cfg: &RunConfig) -> Result<Artifact, Failure> {
    let art = render(cfg)?;
    match &cfg.out {
        Some(path) => fs::write(path, &art.bytes).map_err(Failure::io)?,
        None => std::io::stdout().write_all(&art.bytes).map_err(Failure::io)?,
    }
    if art.passed {
        Ok(art)
    } else {
        Err(Failure {
            status: Status::CheckFailed,
            message: format!("{} check failed", cfg.command),
        })
    }
}
