//! Laplace and characteristic transforms of `Y_t` started at `y0`.
//!
//! `E[exp(-z Y_t)] = exp(-a int_0^t v_s(z) ds - y0 v_t(z))` for `Re z >= 0`.
//! The first factor is the law of `Y_t` started at zero and the second the
//! law of the `a = 0` process started at `y0`; they are computed separately.

use num_complex::Complex64;
use statrs::function::gamma::{gamma, gamma_ur};

use crate::branch::{riccati_v, ComplexScalar, RealFlow, RiccatiFlow};
use crate::error::{Error, Result};
use crate::params::{ModelParams, QuadratureConfig};
use crate::quadrature::{integrate_with_breaks, Tolerance};
use crate::stats::linear_fit;

/// A transform evaluated at one argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformValue {
    pub value: ComplexScalar,
    pub t: f64,
    pub y0: f64,
    pub argument: ComplexScalar,
}

fn check_state(t: f64, y0: f64) -> Result<()> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "t must be finite and nonnegative, got {t}"
        )));
    }
    if !(y0.is_finite() && y0 >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "y0 must be finite and nonnegative, got {y0}"
        )));
    }
    Ok(())
}

/// `E[exp(-lambda Y_t)]` for `Y_0 = y0`.
pub fn laplace_y(
    t: f64,
    y0: f64,
    lambda: f64,
    params: &ModelParams,
    quad: &QuadratureConfig,
) -> Result<f64> {
    params.validate()?;
    quad.validate()?;
    check_state(t, y0)?;
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "lambda must be finite and nonnegative, got {lambda}"
        )));
    }
    if lambda == 0.0 {
        return Ok(1.0);
    }
    Ok(ln_laplace_real(t, y0, lambda, params, quad)?.exp())
}

/// `ln E[exp(-lambda Y_t)]`; inputs are assumed validated.
pub(crate) fn ln_laplace_real(
    t: f64,
    y0: f64,
    lambda: f64,
    params: &ModelParams,
    quad: &QuadratureConfig,
) -> Result<f64> {
    let flow = RealFlow::unchecked(lambda, params);
    let mut out = -y0 * flow.eval(t);
    if params.a != 0.0 {
        out -= params.a * flow.integral(t, Tolerance::from(quad))?.value;
    }
    Ok(out)
}

/// `E[exp(-z Y_t)]` for complex `z` with `Re z >= 0`.
pub fn laplace_y_complex(
    t: f64,
    y0: f64,
    z: ComplexScalar,
    params: &ModelParams,
    quad: &QuadratureConfig,
) -> Result<TransformValue> {
    params.validate()?;
    quad.validate()?;
    check_state(t, y0)?;
    if !(z.re.is_finite() && z.im.is_finite() && z.re >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "argument {z} must be finite with nonnegative real part"
        )));
    }
    let value = if z == Complex64::new(0.0, 0.0) {
        Complex64::new(1.0, 0.0)
    } else {
        ln_laplace_complex(t, y0, z, params, quad)?.exp()
    };
    Ok(TransformValue {
        value,
        t,
        y0,
        argument: z,
    })
}

/// `-a int_0^t v_s(z) ds - y0 v_t(z)`; inputs are assumed validated and
/// `z != 0`.
pub(crate) fn ln_laplace_complex(
    t: f64,
    y0: f64,
    z: Complex64,
    params: &ModelParams,
    quad: &QuadratureConfig,
) -> Result<Complex64> {
    let flow = RiccatiFlow::unchecked(z, params);
    let mut out = Complex64::new(0.0, 0.0);
    if y0 != 0.0 {
        let v = flow
            .eval(t)
            .ok_or_else(|| Error::Domain(format!("Riccati base vanishes for z = {z}")))?;
        out -= v * y0;
    }
    if params.a != 0.0 {
        out -= flow.integral(t, Tolerance::from(quad))?.value * params.a;
    }
    Ok(out)
}

/// `E[exp(i xi Y_t)]`, i.e. the Laplace transform at `-i xi`.
pub fn charfn_y(
    t: f64,
    y0: f64,
    xi: f64,
    params: &ModelParams,
    quad: &QuadratureConfig,
) -> Result<ComplexScalar> {
    if !xi.is_finite() {
        return Err(Error::InvalidArgument(format!("xi must be finite, got {xi}")));
    }
    Ok(laplace_y_complex(t, y0, Complex64::new(0.0, -xi), params, quad)?.value)
}

/// `lim_{lambda -> inf} v_t(lambda) = ((e^{b(alpha-1)t} - 1)/(alpha b))^{1/(1-alpha)}`.
pub fn limit_d(t: f64, params: &ModelParams) -> Result<f64> {
    params.validate()?;
    if !t.is_finite() {
        return Err(Error::InvalidArgument(format!("t must be finite, got {t}")));
    }
    if t < 1e-12 {
        return Err(Error::Domain(format!(
            "limit d diverges as t -> 0; refusing t = {t} below 1e-12"
        )));
    }
    let base = params.riccati_offset() * (params.kappa() * t).exp_m1();
    Ok(base.powf(1.0 / (1.0 - params.alpha)))
}

/// `P(Y_t = 0)` for the `a = 0` process started at `y0`, which is `e^{-y0 d}`.
pub fn atom_probability(t: f64, y0: f64, params: &ModelParams) -> Result<f64> {
    params.validate()?;
    if params.a != 0.0 {
        return Err(Error::InvalidParams(
            "atom probability requires a = 0".into(),
        ));
    }
    check_state(t, y0)?;
    if y0 == 0.0 {
        return Ok(1.0);
    }
    Ok((-y0 * limit_d(t, params)?).exp())
}

/// `E[Y_t] = y0 e^{-bt} + (a/b)(1 - e^{-bt})`.
pub fn mean_y(t: f64, y0: f64, params: &ModelParams) -> Result<f64> {
    params.validate()?;
    check_state(t, y0)?;
    let e = (-params.b * t).exp();
    Ok(y0 * e - params.a / params.b * (-params.b * t).exp_m1())
}

/// Mean of `Y_t` under the exponentially tilted law `e^{-eta y} P(dy) / L(eta)`.
///
/// Uses `d v_s / d lambda = v_s^alpha lambda^{-alpha} e^{b(alpha-1)s}`.
pub fn tilted_mean(
    t: f64,
    y0: f64,
    eta: f64,
    params: &ModelParams,
    quad: &QuadratureConfig,
) -> Result<f64> {
    params.validate()?;
    check_state(t, y0)?;
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tilt must be finite and positive, got {eta}"
        )));
    }
    if t == 0.0 {
        return Ok(y0);
    }
    let flow = RealFlow::unchecked(eta, params);
    let alpha = params.alpha;
    let kappa = params.kappa();
    let dv = |s: f64| (flow.eval(s) / eta).powf(alpha) * (kappa * s).exp();
    let mut m = y0 * dv(t);
    if params.a != 0.0 {
        let tol = Tolerance::from(quad);
        let mut pts = flow.breakpoints(t);
        pts.dedup();
        m += params.a * integrate_with_breaks(dv, &pts, tol)?.value;
    }
    Ok(m)
}

/// Upper envelope `c1 exp(-c2 xi^p)` of `|E[exp(-(eta - i xi) Y_t)]|`,
/// `p = 2 - alpha`.
///
/// `c2` is the least-squares slope of `ln|L|` against `xi^p` over the fit
/// window and `c1` the smallest constant that bounds every sample. The ratio
/// `Re int v_s / xi^p` increases with `xi` towards its limit, so the fitted
/// rate under-estimates the asymptotic one and the envelope stays
/// conservative beyond the window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulusEnvelope {
    pub c1: f64,
    pub c2: f64,
    pub exponent: f64,
    pub fit_lo: f64,
    pub fit_hi: f64,
}

impl ModulusEnvelope {
    pub fn bound(&self, xi: f64) -> f64 {
        self.c1 * (-self.c2 * xi.abs().powf(self.exponent)).exp()
    }

    /// `int_cut^inf c1 exp(-c2 xi^p) d xi`.
    pub fn tail(&self, cut: f64) -> f64 {
        let p = self.exponent;
        let s = 1.0 / p;
        let u = self.c2 * cut.max(0.0).powf(p);
        let upper = if u > 0.0 { gamma_ur(s, u) } else { 1.0 };
        self.c1 * self.c2.powf(-s) / p * gamma(s) * upper
    }

    /// Smallest cutoff (to relative precision 1e-3) whose tail is below
    /// `target`, or a truncation error if it exceeds `cap`.
    pub fn cutoff(&self, target: f64, cap: f64) -> Result<f64> {
        if self.tail(0.0) <= target {
            return Ok(self.fit_lo.min(cap));
        }
        let mut hi = self.fit_lo.max(1.0);
        while self.tail(hi) > target {
            hi *= 2.0;
            if hi > 1e300 {
                break;
            }
        }
        let mut lo = hi / 2.0;
        while hi - lo > 1e-3 * hi {
            let mid = 0.5 * (lo + hi);
            if self.tail(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if hi > cap {
            return Err(Error::Truncation {
                required: hi,
                cap,
                tail_target: target,
            });
        }
        Ok(hi)
    }
}

/// Number of samples in an envelope fit.
const ENVELOPE_SAMPLES: usize = 24;

/// Fits [`ModulusEnvelope`] on the line `Re z = eta` over `xi` in `[lo, 100 lo]`
/// with `lo = max(10, 4 eta)`.
pub fn fit_modulus_envelope(
    t: f64,
    y0: f64,
    eta: f64,
    params: &ModelParams,
    quad: &QuadratureConfig,
) -> Result<ModulusEnvelope> {
    params.require_density()?;
    quad.validate()?;
    check_state(t, y0)?;
    if !(t > 0.0) {
        return Err(Error::InvalidArgument("envelope needs t > 0".into()));
    }
    let lo = 10f64.max(4.0 * eta);
    fit_envelope_on(t, y0, eta, lo, 100.0 * lo, params, quad)
}

/// Envelope of `|charfn_y|` fitted on `xi` in `[10, 1e3]`.
pub fn fit_charfn_envelope(
    t: f64,
    y0: f64,
    params: &ModelParams,
    quad: &QuadratureConfig,
) -> Result<ModulusEnvelope> {
    fit_modulus_envelope(t, y0, 0.0, params, quad)
}

fn fit_envelope_on(
    t: f64,
    y0: f64,
    eta: f64,
    lo: f64,
    hi: f64,
    params: &ModelParams,
    quad: &QuadratureConfig,
) -> Result<ModulusEnvelope> {
    let p = 2.0 - params.alpha;
    let mut us = Vec::with_capacity(ENVELOPE_SAMPLES);
    let mut ys = Vec::with_capacity(ENVELOPE_SAMPLES);
    let ratio = (hi / lo).powf(1.0 / (ENVELOPE_SAMPLES - 1) as f64);
    let mut xi = lo;
    for _ in 0..ENVELOPE_SAMPLES {
        let ln = ln_laplace_complex(t, y0, Complex64::new(eta, -xi), params, quad)?;
        us.push(xi.powf(p));
        ys.push(ln.re);
        xi *= ratio;
    }
    let fit = linear_fit(&us, &ys)?;
    let c2 = -fit.slope;
    if !(c2 > 0.0) {
        return Err(Error::Regression(format!(
            "modulus does not decay on [{lo}, {hi}] (rate {c2})"
        )));
    }
    let ln_c1 = us
        .iter()
        .zip(&ys)
        .map(|(u, y)| y + c2 * u)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ModulusEnvelope {
        c1: ln_c1.exp(),
        c2,
        exponent: p,
        fit_lo: lo,
        fit_hi: hi,
    })
}

/// `psi = -v_t(z)`, the coefficient of `y0` in the log transform.
pub fn psi(t: f64, z: ComplexScalar, params: &ModelParams) -> Result<ComplexScalar> {
    Ok(-riccati_v(t, z, params)?)
}

/// `phi = -a int_0^t v_s(z) ds`, the state-independent part of the log transform.
pub fn phi(
    t: f64,
    z: ComplexScalar,
    params: &ModelParams,
    quad: &QuadratureConfig,
) -> Result<ComplexScalar> {
    Ok(-crate::branch::riccati_v_integral(t, z, params, quad)? * params.a)
}

/// Numerical `-d/d lambda ln L` at `lambda`, by a centered difference; used
/// as an independent check of [`mean_y`] and [`tilted_mean`].
pub fn numerical_tilted_mean(
    t: f64,
    y0: f64,
    lambda: f64,
    h: f64,
    params: &ModelParams,
    quad: &QuadratureConfig,
) -> Result<f64> {
    let f = |l: f64| ln_laplace_real(t, y0, l, params, quad);
    Ok(-(f(lambda + h)? - f(lambda - h)?) / (2.0 * h))
}
