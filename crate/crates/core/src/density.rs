//! Transition density of `Y_t` by Fourier inversion and by the real-axis
//! representation, plus grids, CDF and normalisation.
//!
//! Fourier inversion integrates `e^{z x} L(z)` along the vertical line
//! `Re z = eta`, where `L(z) = E[exp(-z Y_t)]`:
//!
//! ```text
//! f(x) = (1/pi) int_0^inf Re[ exp((eta + i xi) x) L(eta + i xi) ] d xi
//! ```
//!
//! `eta = 0` is the plain characteristic-function inversion. Below the mean
//! the density can be far smaller than the round-off of the `eta = 0`
//! integral, so there the line is moved to the saddle point `eta > 0`
//! solving `E_eta[Y_t] = x`, which keeps the integrand positive and of the
//! same order as the result. Both lines give the same value because `L` is
//! analytic in `Re z > 0`.
//!
//! The real-axis representation, valid for `y0 = 0` and `x > 0`, is
//!
//! ```text
//! f(x) = (1/pi) int_0^inf e^{-x z} (-Im exp(-a int_0^t v_s(-z) ds)) dz
//! ```
//!
//! with `v_s(-z)` taken on the upper side of the cut.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::branch::RiccatiFlow;
use crate::error::{Error, Result};
use crate::fmt::fmt_f64;
use crate::params::{ModelParams, QuadratureConfig};
use crate::quadrature::{integrate_with_breaks, Tolerance, WG, WGK, XGK};
use crate::transforms::{fit_modulus_envelope, ln_laplace_complex, ln_laplace_real, mean_y, tilted_mean};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Representation {
    Fourier,
    RealAxis,
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Representation::Fourier => "fourier",
            Representation::RealAxis => "real_axis",
        })
    }
}

impl FromStr for Representation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fourier" => Ok(Representation::Fourier),
            "real_axis" | "real-axis" => Ok(Representation::RealAxis),
            _ => Err(Error::InvalidArgument(format!(
                "unknown representation {s:?} (expected fourier or real_axis)"
            ))),
        }
    }
}

/// Density values on a grid together with the normalisation defect.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub t: f64,
    pub y0: f64,
    pub xs: Vec<f64>,
    pub values: Vec<f64>,
    pub representation: Representation,
    /// `|trapezoid(values) + P(Y < xs[0]) + P(Y > xs[last]) - 1|`.
    pub norm_defect: f64,
    pub params: ModelParams,
    /// Set when the grid contains `x = 0`. The value there is the inversion
    /// formula's, although the law puts no mass on `x <= 0` when `y0 = 0`.
    pub boundary_point: bool,
}

impl DensityGrid {
    /// Trapezoidal integral over the grid.
    pub fn trapezoid(&self) -> f64 {
        trapezoid(&self.xs, &self.values)
    }

    /// Trapezoidal first moment over the grid.
    pub fn first_moment(&self) -> f64 {
        let g: Vec<f64> = self.xs.iter().zip(&self.values).map(|(x, f)| x * f).collect();
        trapezoid(&self.xs, &g)
    }

    /// Writes `x,f,representation,norm_defect` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,f,representation,norm_defect")?;
        let nd = fmt_f64(self.norm_defect);
        for (x, f) in self.xs.iter().zip(&self.values) {
            writeln!(w, "{},{},{},{}", fmt_f64(*x), fmt_f64(*f), self.representation, nd)?;
        }
        Ok(())
    }
}

pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

fn check_inputs(t: f64, y0: f64, params: &ModelParams, quad: &QuadratureConfig) -> Result<()> {
    params.require_density()?;
    quad.validate()?;
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidArgument(format!("t must be positive, got {t}")));
    }
    if !(y0.is_finite() && y0 >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "y0 must be finite and nonnegative, got {y0}"
        )));
    }
    Ok(())
}

fn check_x(x: f64) -> Result<()> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "x must be finite and nonnegative, got {x}"
        )))
    }
}

/// Geometric grading of the first unit of frequency, where `L(-i xi)` has
/// a `xi^alpha` type singularity.
const GRADING_LEVELS: i32 = 24;

/// Number of halvings of the panel width before a table gives up.
const MAX_REFINEMENTS: usize = 3;

/// `L(-i xi)` tabulated on Kronrod nodes of a fixed panel partition of
/// `[0, cutoff]`, shared by every abscissa on the `eta = 0` line.
#[derive(Debug, Clone)]
pub struct FourierTable {
    nodes: Vec<f64>,
    kronrod: Vec<f64>,
    gauss: Vec<f64>,
    panel_start: Vec<usize>,
    values: Vec<Complex64>,
    pub cutoff: f64,
    pub tail_bound: f64,
    pub panel_width: f64,
}

impl FourierTable {
    fn build(
        t: f64,
        y0: f64,
        width: f64,
        cutoff: f64,
        tail_bound: f64,
        params: &ModelParams,
        quad: &QuadratureConfig,
    ) -> Result<Self> {
        let mut edges = vec![0.0];
        for k in (0..GRADING_LEVELS).rev() {
            edges.push(width.min(1.0) * 2f64.powi(-k));
        }
        let mut e = *edges.last().unwrap();
        while e < cutoff {
            e = (e + width).min(cutoff);
            edges.push(e);
        }
        let mut nodes = Vec::with_capacity(21 * edges.len());
        let mut kronrod = Vec::with_capacity(nodes.capacity());
        let mut gauss = Vec::with_capacity(nodes.capacity());
        let mut panel_start = Vec::with_capacity(edges.len());
        for w in edges.windows(2) {
            panel_start.push(nodes.len());
            let c = 0.5 * (w[0] + w[1]);
            let h = 0.5 * (w[1] - w[0]);
            for j in 0..21 {
                let (x, wk, wg) = if j < 10 {
                    (-XGK[j], WGK[j], if j % 2 == 1 { WG[j / 2] } else { 0.0 })
                } else if j == 10 {
                    (0.0, WGK[10], 0.0)
                } else {
                    let m = 20 - j;
                    (XGK[m], WGK[m], if m % 2 == 1 { WG[m / 2] } else { 0.0 })
                };
                nodes.push(c + h * x);
                kronrod.push(h * wk);
                gauss.push(h * wg);
            }
        }
        panel_start.push(nodes.len());
        let values = nodes
            .par_iter()
            .map(|&xi| {
                ln_laplace_complex(t, y0, Complex64::new(0.0, -xi), params, quad).map(|l| l.exp())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            nodes,
            kronrod,
            gauss,
            panel_start,
            values,
            cutoff,
            tail_bound,
            panel_width: width,
        })
    }

    /// `(1/pi) int_0^cutoff Re[k(xi) L(-i xi)] d xi` and the summed
    /// Kronrod-Gauss difference.
    fn apply<K: Fn(f64) -> Complex64>(&self, kernel: K) -> (f64, f64) {
        let mut total = 0.0;
        let mut err = 0.0;
        for p in self.panel_start.windows(2) {
            let mut k = 0.0;
            let mut g = 0.0;
            for j in p[0]..p[1] {
                let v = (kernel(self.nodes[j]) * self.values[j]).re;
                k += self.kronrod[j] * v;
                g += self.gauss[j] * v;
            }
            total += k;
            err += (k - g).abs();
        }
        (total / std::f64::consts::PI, err / std::f64::consts::PI)
    }

    /// Density at `x` from the table, with its error estimate (the
    /// truncation tail included).
    pub fn density(&self, x: f64) -> (f64, f64) {
        let (f, e) = self.apply(|xi| Complex64::from_polar(1.0, -xi * x));
        (f, e + self.tail_bound / std::f64::consts::PI)
    }

    /// `P(Y_t <= x)` by integrating the inversion formula in `x` under the
    /// integral sign.
    pub fn cdf(&self, x: f64) -> (f64, f64) {
        if x == 0.0 {
            return (0.0, 0.0);
        }
        let (f, e) = self.apply(|xi| x * cdf_kernel(x * xi));
        let tail = self.tail_bound * (2.0 / self.cutoff).min(x);
        (f, e + tail / std::f64::consts::PI)
    }
}

/// `(1 - e^{-i theta}) / (i theta)`, with `1 - cos` written as `2 sin^2`
/// to avoid cancellation.
fn cdf_kernel(theta: f64) -> Complex64 {
    if theta == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let half = (0.5 * theta).sin();
    Complex64::new(theta.sin() / theta, -2.0 * half * half / theta)
}

/// Builds a table accurate for every `x` in `[0, x_max]`.
///
/// Alias-free resolution needs the panel width to stay below `2/x_max`; the
/// width is halved until the Kronrod-Gauss difference at `x_max` is below
/// the target.
pub fn fourier_table(
    t: f64,
    y0: f64,
    x_max: f64,
    params: &ModelParams,
    quad: &QuadratureConfig,
) -> Result<FourierTable> {
    check_inputs(t, y0, params, quad)?;
    check_x(x_max)?;
    let target = quad.abs_tol / 10.0;
    let env = fit_modulus_envelope(t, y0, 0.0, params, quad)?;
    let cutoff = env.cutoff(target, quad.xi_truncation)?;
    let tail = env.tail(cutoff);
    let mut width = if x_max > 0.0 { (2.0 / x_max).min(1.0) } else { 1.0 };
    let mut last_err = f64::INFINITY;
    for _ in 0..=MAX_REFINEMENTS {
        let table = FourierTable::build(t, y0, width, cutoff, tail, params, quad)?;
        let (_, err) = table.apply(|xi| Complex64::from_polar(1.0, -xi * x_max));
        if err <= quad.abs_tol {
            return Ok(table);
        }
        last_err = err;
        width /= 2.0;
    }
    Err(Error::Quadrature {
        estimate: last_err,
        requested: quad.abs_tol,
        subdivisions: MAX_REFINEMENTS,
    })
}

/// Saddle point `eta` of `e^{eta x} L(eta)`, solving `E_eta[Y_t] = x`.
/// Requires `0 < x < E[Y_t]`; relative accuracy `1e-3` is plenty since any
/// `eta > 0` gives the same density.
pub fn saddle_point(
    t: f64,
    y0: f64,
    x: f64,
    params: &ModelParams,
    quad: &QuadratureConfig,
) -> Result<f64> {
    let mean = mean_y(t, y0, params)?;
    if !(x > 0.0 && x < mean) {
        return Err(Error::InvalidArgument(format!(
            "saddle point needs 0 < x < mean = {mean}, got {x}"
        )));
    }
    let m = |eta: f64| tilted_mean(t, y0, eta, params, quad);
    let mut hi = 1.0 / mean;
    while m(hi)? > x {
        hi *= 4.0;
        if hi > 1e12 {
            return Err(Error::Domain(format!("no saddle point found for x = {x}")));
        }
    }
    let mut lo = hi / 4.0;
    if m(lo)? <= x {
        let mut l = lo;
        while l > 1e-12 && m(l)? <= x {
            l /= 4.0;
        }
        lo = l;
    }
    while hi / lo > 1.0 + 1e-3 {
        let mid = (lo * hi).sqrt();
        if m(mid)? > x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo * hi).sqrt())
}

/// Density on the line `Re z = eta > 0`, pointwise.
fn density_tilted(
    t: f64,
    y0: f64,
    x: f64,
    eta: f64,
    params: &ModelParams,
    quad: &QuadratureConfig,
) -> Result<f64> {
    let ln0 = ln_laplace_real(t, y0, eta, params, quad)? + eta * x;
    let scale = ln0.exp();
    let target = quad.abs_tol.min(quad.rel_tol * scale) / 10.0;
    let mut env = fit_modulus_envelope(t, y0, eta, params, quad)?;
    env.c1 *= (eta * x).exp();
    let cutoff = env.cutoff(target, quad.xi_truncation)?;

    let width = (2.0 * std::f64::consts::PI / x).min(cutoff / 16.0);
    let mut pts = vec![0.0];
    let mut s = (eta / 64.0).min(width);
    while s < width {
        pts.push(s);
        s *= 2.0;
    }
    let mut e = width;
    while e < cutoff {
        pts.push(e);
        e += width;
    }
    pts.push(cutoff);

    let mut failure = None;
    let est = integrate_with_breaks(
        |xi: f64| {
            let z = Complex64::new(eta, xi);
            match ln_laplace_complex(t, y0, z, params, quad) {
                Ok(l) => (l + z * x).exp().re,
                Err(err) => {
                    failure.get_or_insert(err);
                    0.0
                }
            }
        },
        &pts,
        Tolerance::new(target, quad.rel_tol, quad.max_subdivisions),
    )?;
    if let Some(err) = failure {
        return Err(err);
    }
    Ok(est.value / std::f64::consts::PI)
}

/// Density of `Y_t` started at `y0`, evaluated at `x >= 0` by Fourier
/// inversion.
pub fn density_fourier(
    t: f64,
    y0: f64,
    x: f64,
    params: &ModelParams,
    quad: &QuadratureConfig,
) -> Result<f64> {
    check_inputs(t, y0, params, quad)?;
    check_x(x)?;
    if uses_saddle(t, y0, x, params)? {
        let eta = saddle_point(t, y0, x, params, quad)?;
        density_tilted(t, y0, x, eta, params, quad)
    } else {
        Ok(fourier_table(t, y0, x, params, quad)?.density(x).0)
    }
}

fn uses_saddle(t: f64, y0: f64, x: f64, params: &ModelParams) -> Result<bool> {
    Ok(x > 0.0 && x < mean_y(t, y0, params)?)
}

/// Density of `Y_t` started at `0`, by the real-axis representation.
pub fn density_real_axis(
    t: f64,
    y0: f64,
    x: f64,
    params: &ModelParams,
    quad: &QuadratureConfig,
) -> Result<f64> {
    check_inputs(t, y0, params, quad)?;
    if y0 != 0.0 {
        return Err(Error::InvalidArgument(
            "the real-axis representation requires y0 = 0".into(),
        ));
    }
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "the real-axis representation requires x > 0, got {x}"
        )));
    }
    let a = params.a;
    let mut failure = None;
    let mut g = |z: f64| -> f64 {
        if z == 0.0 {
            return 0.0;
        }
        let flow = RiccatiFlow::unchecked(Complex64::new(-z, 0.0), params);
        match flow.integral(t, Tolerance::from(quad)) {
            Ok(i) => (-x * z).exp() * -(-(i.value * a)).exp().im,
            Err(err) => {
                failure.get_or_insert(err);
                0.0
            }
        }
    };

    let target = quad.abs_tol / 10.0;
    let z1 = 1.0 / x;
    let mut pts = vec![0.0];
    for k in (1..=20).rev() {
        pts.push(z1 * 2f64.powi(-k));
    }
    pts.push(z1);
    let mut total = integrate_with_breaks(&mut g, &pts, Tolerance::new(target / 2.0, quad.rel_tol, quad.max_subdivisions))?
        .value;
    // doubling panels until the contribution of two consecutive ones is
    // negligible and the exponential damping dominates
    let mut lo = z1;
    let mut quiet = 0;
    let mut panels = 0usize;
    while quiet < 2 {
        let hi = 2.0 * lo;
        let part = integrate_with_breaks(
            &mut g,
            &[lo, hi],
            Tolerance::new(target / 4.0, quad.rel_tol, quad.max_subdivisions),
        )?
        .value;
        total += part;
        if part.abs() < target / 4.0 && x * hi > 30.0 {
            quiet += 1;
        } else {
            quiet = 0;
        }
        lo = hi;
        panels += 1;
        if panels > 200 {
            return Err(Error::Quadrature {
                estimate: part.abs(),
                requested: target,
                subdivisions: panels,
            });
        }
    }
    if let Some(err) = failure {
        return Err(err);
    }
    Ok(total / std::f64::consts::PI)
}

fn at(x: f64) -> impl FnOnce(Error) -> Error {
    move |e| Error::AtAbscissa {
        x,
        source: Box::new(e),
    }
}

/// Evaluates the density at every abscissa (in parallel) and fills the
/// normalisation defect. `xs` must be increasing and nonnegative.
pub fn density_grid(
    t: f64,
    y0: f64,
    xs: &[f64],
    params: &ModelParams,
    quad: &QuadratureConfig,
    representation: Representation,
) -> Result<DensityGrid> {
    check_inputs(t, y0, params, quad)?;
    if xs.is_empty() {
        return Err(Error::InvalidArgument("empty grid".into()));
    }
    for &x in xs {
        check_x(x).map_err(at(x))?;
    }
    if xs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("grid must be strictly increasing".into()));
    }
    let x_max = *xs.last().unwrap();
    let table = fourier_table(t, y0, x_max, params, quad)?;

    let values = match representation {
        Representation::Fourier => xs
            .par_iter()
            .map(|&x| {
                if uses_saddle(t, y0, x, params)? {
                    let eta = saddle_point(t, y0, x, params, quad).map_err(at(x))?;
                    density_tilted(t, y0, x, eta, params, quad).map_err(at(x))
                } else {
                    Ok(table.density(x).0)
                }
            })
            .collect::<Result<Vec<_>>>()?,
        Representation::RealAxis => xs
            .par_iter()
            .map(|&x| density_real_axis(t, y0, x, params, quad).map_err(at(x)))
            .collect::<Result<Vec<_>>>()?,
    };

    let head = table.cdf(xs[0]).0;
    let tail = 1.0 - table.cdf(x_max).0;
    let norm_defect = (trapezoid(xs, &values) + head + tail - 1.0).abs();
    Ok(DensityGrid {
        t,
        y0,
        xs: xs.to_vec(),
        values,
        representation,
        norm_defect,
        params: *params,
        boundary_point: xs[0] == 0.0,
    })
}

/// `P(Y_t <= x)`.
pub fn cdf_y(t: f64, y0: f64, x: f64, params: &ModelParams, quad: &QuadratureConfig) -> Result<f64> {
    check_inputs(t, y0, params, quad)?;
    check_x(x)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    let table = fourier_table(t, y0, x, params, quad)?;
    Ok(table.cdf(x).0.clamp(0.0, 1.0))
}

/// `P(Y_t <= x)` at several points from one shared table.
pub fn cdf_many(
    t: f64,
    y0: f64,
    xs: &[f64],
    params: &ModelParams,
    quad: &QuadratureConfig,
) -> Result<Vec<f64>> {
    check_inputs(t, y0, params, quad)?;
    for &x in xs {
        check_x(x).map_err(at(x))?;
    }
    let x_max = xs.iter().cloned().fold(0.0, f64::max);
    let table = fourier_table(t, y0, x_max, params, quad)?;
    Ok(xs.iter().map(|&x| table.cdf(x).0.clamp(0.0, 1.0)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> ModelParams {
        ModelParams::alpha_root(1.0, 1.0, 1.5).unwrap()
    }

    #[test]
    fn representation_names() {
        assert_eq!(Representation::Fourier.to_string(), "fourier");
        assert_eq!("real_axis".parse::<Representation>().unwrap(), Representation::RealAxis);
        assert!("laplace".parse::<Representation>().is_err());
    }

    #[test]
    fn cdf_kernel_is_continuous_at_zero() {
        let k = cdf_kernel(1e-6);
        assert!((k - Complex64::new(1.0, -5e-7)).norm() < 1e-12);
        assert_eq!(cdf_kernel(0.0), Complex64::new(1.0, 0.0));
        let k = cdf_kernel(2.0);
        let direct = (Complex64::new(1.0, 0.0) - Complex64::new(0.0, -2.0).exp()) / Complex64::new(0.0, 2.0);
        assert!((k - direct).norm() < 1e-15);
    }

    #[test]
    fn rejects_invalid_requests() {
        let q = QuadratureConfig::default();
        let p0 = ModelParams::alpha_root(0.0, 1.0, 1.5).unwrap();
        assert!(density_fourier(1.0, 1.0, 1.0, &p0, &q).is_err());
        assert!(density_real_axis(1.0, 1.0, 1.0, &reference(), &q).is_err());
        assert!(density_real_axis(1.0, 0.0, 0.0, &reference(), &q).is_err());
        assert!(density_grid(1.0, 0.0, &[1.0, 0.5], &reference(), &q, Representation::Fourier).is_err());
    }

    #[test]
    fn fourier_reference_values() {
        let q = QuadratureConfig::default();
        let p = reference();
        // frozen from an independent double-precision prototype of the same
        // inversion integral
        let f = density_fourier(1.0, 0.0, 1.0, &p, &q).unwrap();
        assert!((f - 0.213_604_017_704_516_84).abs() < 1e-10, "{f}");
        let f = density_fourier(1.0, 1.0, 2.0, &p, &q).unwrap();
        assert!((f - 0.065_888_222_135_6).abs() < 1e-10, "{f}");
    }

    #[test]
    fn cdf_increments_integrate_the_density() {
        let q = QuadratureConfig::default();
        let p = reference();
        for y0 in [0.0, 1.0] {
            let (lo, hi) = (0.5, 2.5);
            let c = cdf_many(1.0, y0, &[lo, hi], &p, &q).unwrap();
            // Simpson on 400 panels
            let n = 400;
            let h = (hi - lo) / n as f64;
            let mut s = 0.0;
            for i in 0..=n {
                let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                s += w * density_fourier(1.0, y0, lo + h * i as f64, &p, &q).unwrap();
            }
            s *= h / 3.0;
            assert!((c[1] - c[0] - s).abs() < 1e-8, "y0={y0}: {} vs {s}", c[1] - c[0]);
        }
    }

    #[test]
    fn saddle_line_agrees_with_plain_line() {
        let q = QuadratureConfig::default();
        let p = reference();
        let x = 0.5;
        let table = fourier_table(1.0, 0.0, x, &p, &q).unwrap();
        let plain = table.density(x).0;
        let eta = saddle_point(1.0, 0.0, x, &p, &q).unwrap();
        let tilted = density_tilted(1.0, 0.0, x, eta, &p, &q).unwrap();
        assert!((plain - tilted).abs() < 1e-11, "{plain} {tilted}");
        assert!((plain - 1.476_193_628_474).abs() < 1e-10);
    }

    #[test]
    fn csv_layout() {
        let grid = DensityGrid {
            t: 1.0,
            y0: 0.0,
            xs: vec![0.0, 0.5],
            values: vec![1e-20, 0.25],
            representation: Representation::Fourier,
            norm_defect: 2.5e-7,
            params: reference(),
            boundary_point: true,
        };
        let mut out = Vec::new();
        grid.write_csv(&mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "x,f,representation,norm_defect\n0,1e-20,fourier,2.5e-7\n0.5,0.25,fourier,2.5e-7\n"
        );
    }
}
