//! Principal-branch complex powers and the Riccati flow `v_t(z)`.
//!
//! `v_t` solves `dv/dt = -b v - v^alpha / alpha` with `v_0 = z`. The
//! Bernoulli substitution `u = v^{1-alpha}` linearises the equation, so
//!
//! ```text
//! v_t(z) = ((1/(alpha b) + z^{1-alpha}) e^{b(alpha-1)t} - 1/(alpha b))^{1/(1-alpha)}
//! ```
//!
//! with principal-branch powers. The base is evaluated as
//! `w e^{kt} + c expm1(kt)` to keep precision for small `t`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::{ModelParams, QuadratureConfig};
use crate::quadrature::{integrate_with_breaks, Estimate, Tolerance};

/// Complex scalar with principal-branch semantics for [`principal_pow`].
pub type ComplexScalar = Complex64;

/// Bases closer to zero than this are reported as a domain error.
pub const DEGENERATE_BASE: f64 = 1e-14;

/// Principal argument in `(-pi, pi]`. The whole negative real axis,
/// including `-0.0` imaginary parts, maps to `+pi`.
#[inline]
pub fn principal_arg(z: Complex64) -> f64 {
    if z.im == 0.0 && z.re < 0.0 {
        PI
    } else {
        z.im.atan2(z.re)
    }
}

#[inline]
pub fn principal_ln(z: Complex64) -> Complex64 {
    Complex64::new(z.norm().ln(), principal_arg(z))
}

/// `z^beta = exp(beta Log z)`. `z^0 = 1` for every `z`; `0^beta` is `0`
/// for `beta > 0` and infinite for `beta < 0`.
#[inline]
pub fn principal_pow(z: Complex64, beta: f64) -> Complex64 {
    if beta == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    if z.re == 0.0 && z.im == 0.0 {
        return if beta > 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(f64::INFINITY, 0.0)
        };
    }
    let r = z.norm().powf(beta);
    let phi = beta * principal_arg(z);
    Complex64::from_polar(r, phi)
}

fn check_point(z: Complex64) -> Result<()> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::InvalidArgument(format!("z = {z} is not finite")));
    }
    if z.re == 0.0 && z.im == 0.0 {
        return Err(Error::InvalidArgument("z must be nonzero".into()));
    }
    Ok(())
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "t must be finite and nonnegative, got {t}"
        )))
    }
}

/// The flow started from a fixed `z`, with `z^{1-alpha}` precomputed.
#[derive(Debug, Clone, Copy)]
pub struct RiccatiFlow {
    z: Complex64,
    w: Complex64,
    c: f64,
    kappa: f64,
    inv: f64,
}

impl RiccatiFlow {
    pub fn new(z: Complex64, params: &ModelParams) -> Result<Self> {
        params.validate()?;
        check_point(z)?;
        Ok(Self::unchecked(z, params))
    }

    pub(crate) fn unchecked(z: Complex64, params: &ModelParams) -> Self {
        Self {
            z,
            w: principal_pow(z, 1.0 - params.alpha),
            c: params.riccati_offset(),
            kappa: params.kappa(),
            inv: 1.0 / (1.0 - params.alpha),
        }
    }

    /// Starting point.
    pub fn z(&self) -> Complex64 {
        self.z
    }

    /// `w e^{kt} + c expm1(kt)`, the base of the outer power.
    #[inline]
    pub fn base(&self, t: f64) -> Complex64 {
        let kt = self.kappa * t;
        self.w * kt.exp() + self.c * kt.exp_m1()
    }

    /// `v_t(z)`; `None` when the base is degenerate.
    #[inline]
    pub fn eval(&self, t: f64) -> Option<Complex64> {
        if t == 0.0 {
            return Some(self.z);
        }
        let base = self.base(t);
        if base.norm() < DEGENERATE_BASE {
            None
        } else {
            Some(principal_pow(base, self.inv))
        }
    }

    /// Time scale on which `v_s` leaves its initial value. Below it the
    /// flow is nearly constant; above it `v_s` decays like a power of `s`.
    pub fn transition_time(&self) -> f64 {
        self.w.norm() / (self.c * self.kappa)
    }

    /// Breakpoints for integrating over `[0, t]`.
    pub fn breakpoints(&self, t: f64) -> Vec<f64> {
        let mut pts = vec![0.0];
        let tau = self.transition_time();
        if tau.is_finite() && tau > 0.0 {
            let mut s = tau / 16.0;
            while s < t && pts.len() < 64 {
                if s > 0.0 {
                    pts.push(s);
                }
                s *= 4.0;
            }
        }
        pts.push(t);
        pts
    }

    /// `int_0^t v_s ds` with the full integration report.
    pub fn integral(&self, t: f64, tol: Tolerance) -> Result<Estimate<Complex64>> {
        check_time(t)?;
        if t == 0.0 {
            return Ok(Estimate {
                value: Complex64::new(0.0, 0.0),
                error: 0.0,
                abs_integral: 0.0,
                evaluations: 0,
                subdivisions: 0,
            });
        }
        let mut bad = None;
        let est = integrate_with_breaks(
            |s| match self.eval(s) {
                Some(v) => v,
                None => {
                    bad.get_or_insert(s);
                    Complex64::new(0.0, 0.0)
                }
            },
            &self.breakpoints(t),
            tol,
        )?;
        if let Some(s) = bad {
            return Err(degenerate(self.z, s));
        }
        Ok(est)
    }
}

fn degenerate(z: Complex64, t: f64) -> Error {
    Error::Domain(format!(
        "Riccati base vanishes for z = {z} at t = {t}"
    ))
}

/// `v_t(z)` on the cut plane; `v_0(z) = z`.
pub fn riccati_v(t: f64, z: ComplexScalar, params: &ModelParams) -> Result<ComplexScalar> {
    check_time(t)?;
    let flow = RiccatiFlow::new(z, params)?;
    flow.eval(t).ok_or_else(|| degenerate(z, t))
}

/// `v_t(lambda)` for real `lambda > 0`.
pub fn riccati_v_real(t: f64, lambda: f64, params: &ModelParams) -> Result<f64> {
    params.validate()?;
    check_time(t)?;
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "lambda must be finite and positive, got {lambda}"
        )));
    }
    Ok(RealFlow::unchecked(lambda, params).eval(t))
}

/// Real counterpart of [`RiccatiFlow`] for `lambda > 0`, where the base is
/// always positive.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RealFlow {
    lambda: f64,
    w: f64,
    c: f64,
    kappa: f64,
    inv: f64,
}

impl RealFlow {
    pub(crate) fn unchecked(lambda: f64, params: &ModelParams) -> Self {
        Self {
            lambda,
            w: lambda.powf(1.0 - params.alpha),
            c: params.riccati_offset(),
            kappa: params.kappa(),
            inv: 1.0 / (1.0 - params.alpha),
        }
    }

    #[inline]
    pub(crate) fn eval(&self, t: f64) -> f64 {
        if t == 0.0 {
            return self.lambda;
        }
        let kt = self.kappa * t;
        (self.w * kt.exp() + self.c * kt.exp_m1()).powf(self.inv)
    }

    pub(crate) fn breakpoints(&self, t: f64) -> Vec<f64> {
        let mut pts = vec![0.0];
        let tau = self.w / (self.c * self.kappa);
        let mut s = tau / 16.0;
        while s < t && pts.len() < 64 {
            if s > 0.0 {
                pts.push(s);
            }
            s *= 4.0;
        }
        pts.push(t);
        pts
    }

    pub(crate) fn integral(&self, t: f64, tol: Tolerance) -> Result<Estimate<f64>> {
        if t == 0.0 {
            return Ok(Estimate {
                value: 0.0,
                error: 0.0,
                abs_integral: 0.0,
                evaluations: 0,
                subdivisions: 0,
            });
        }
        integrate_with_breaks(|s| self.eval(s), &self.breakpoints(t), tol)
    }
}

/// `int_0^t v_s(z) ds` by adaptive quadrature; `0` for `t = 0`.
pub fn riccati_v_integral(
    t: f64,
    z: ComplexScalar,
    params: &ModelParams,
    quad: &QuadratureConfig,
) -> Result<ComplexScalar> {
    quad.validate()?;
    let flow = RiccatiFlow::new(z, params)?;
    Ok(flow.integral(t, Tolerance::from(quad))?.value)
}

/// `int_0^t v_s(lambda) ds` for real `lambda > 0`.
pub fn riccati_v_integral_real(
    t: f64,
    lambda: f64,
    params: &ModelParams,
    quad: &QuadratureConfig,
) -> Result<f64> {
    Ok(riccati_v_integral_real_estimate(t, lambda, params, quad)?.value)
}

/// As [`riccati_v_integral_real`] but returning the quadrature report.
pub fn riccati_v_integral_real_estimate(
    t: f64,
    lambda: f64,
    params: &ModelParams,
    quad: &QuadratureConfig,
) -> Result<Estimate<f64>> {
    quad.validate()?;
    riccati_v_real(t, lambda, params)?;
    RealFlow::unchecked(lambda, params).integral(t, Tolerance::from(quad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p(alpha: f64, b: f64) -> ModelParams {
        ModelParams::alpha_root(1.0, b, alpha).unwrap()
    }

    #[test]
    fn arg_on_the_cut_is_plus_pi() {
        assert_eq!(principal_arg(Complex64::new(-2.0, 0.0)), PI);
        assert_eq!(principal_arg(Complex64::new(-2.0, -0.0)), PI);
        assert_eq!(principal_arg(Complex64::new(0.0, -1.0)), -PI / 2.0);
        let z = principal_pow(Complex64::new(-4.0, 0.0), 0.5);
        assert!((z - Complex64::new(0.0, 2.0)).norm() < 1e-15);
    }

    #[test]
    fn zero_power_is_one() {
        for z in [Complex64::new(-3.0, 0.0), Complex64::new(0.2, -7.0)] {
            assert_eq!(principal_pow(z, 0.0), Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn initial_condition() {
        let v = riccati_v(0.0, Complex64::new(3.7, 0.0), &p(1.5, 1.0)).unwrap();
        assert_eq!(v, Complex64::new(3.7, 0.0));
        assert_eq!(riccati_v_real(0.0, 3.7, &p(1.5, 1.0)).unwrap(), 3.7);
    }

    #[test]
    fn real_and_complex_agree() {
        let params = p(1.3, 0.7);
        for &(t, l) in &[(0.2, 0.5), (1.0, 3.0), (2.5, 40.0)] {
            let vr = riccati_v_real(t, l, &params).unwrap();
            let vc = riccati_v(t, Complex64::new(l, 0.0), &params).unwrap();
            assert_relative_eq!(vr, vc.re, max_relative = 1e-14);
            assert!(vc.im.abs() < 1e-15 * vr);
        }
    }

    #[test]
    fn ode_residual_at_spec_point() {
        let params = p(1.5, 1.0);
        let h = 1e-5;
        let v = |t: f64| riccati_v_real(t, 2.0, &params).unwrap();
        let dv = (v(0.3 + h) - v(0.3 - h)) / (2.0 * h);
        let x = v(0.3);
        assert!((dv + x + x.powf(1.5) / 1.5).abs() < 1e-6);
    }

    #[test]
    fn rejects_zero_and_bad_params() {
        assert!(riccati_v(1.0, Complex64::new(0.0, 0.0), &p(1.5, 1.0)).is_err());
        let bad = ModelParams {
            a: 1.0,
            b: 1.0,
            alpha: 2.0,
            m: 0.0,
            theta: 1.0,
        };
        assert!(riccati_v(1.0, Complex64::new(1.0, 0.0), &bad).is_err());
        assert!(riccati_v(-1.0, Complex64::new(1.0, 0.0), &p(1.5, 1.0)).is_err());
    }

    #[test]
    fn degenerate_base_is_detected() {
        // base vanishes at t when w = -c (e^{kt}-1) e^{-kt}; no valid z
        // produces this w, so the flow is built by hand
        let params = p(1.5, 1.0);
        let t = 1.0;
        let c = params.riccati_offset();
        let k = params.kappa();
        let w = -c * (k * t).exp_m1() / (k * t).exp();
        let flow = RiccatiFlow {
            z: Complex64::new(1.0, 0.0),
            w: Complex64::new(w, 0.0),
            c,
            kappa: k,
            inv: -2.0,
        };
        assert!(flow.eval(t).is_none());
    }

    #[test]
    fn integral_at_zero_time_is_zero() {
        let q = QuadratureConfig::default();
        let i = riccati_v_integral(0.0, Complex64::new(0.3, 2.0), &p(1.5, 1.0), &q).unwrap();
        assert_eq!(i, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn integral_real_is_positive_and_matches_complex() {
        let q = QuadratureConfig::default();
        let params = p(1.5, 1.0);
        let r = riccati_v_integral_real(1.0, 1.0, &params, &q).unwrap();
        let c = riccati_v_integral(1.0, Complex64::new(1.0, 0.0), &params, &q).unwrap();
        assert!(r > 0.0);
        assert_relative_eq!(r, c.re, max_relative = 1e-11);
    }

    #[test]
    fn integral_for_huge_argument_matches_asymptotics() {
        // int_0^t v_s(z) ds ~ alpha/(2-alpha) z^{2-alpha} for |z| -> infinity
        let params = p(1.5, 1.0);
        let q = QuadratureConfig::default();
        let z = Complex64::new(0.0, 1e12);
        let i = riccati_v_integral(1.0, z, &params, &q).unwrap();
        let lead = principal_pow(z, 0.5) * 3.0;
        assert!(((i - lead) / lead).norm() < 1e-3);
    }
}
