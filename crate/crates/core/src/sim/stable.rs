//! The spectrally positive, compensated alpha-stable driver.
//!
//! Its Lévy measure is `C_alpha z^{-1-alpha} dz` on `z > 0` with
//! `C_alpha = 1/(alpha Gamma(-alpha))`, which gives the Laplace exponent
//! `E[exp(-lambda L_t)] = exp(t lambda^alpha / alpha)`.
//!
//! Draws use the Chambers-Mallows-Stuck transform for a totally skewed
//! stable law `S(alpha, 1, 1, 0)`, whose Laplace exponent is
//! `lambda^alpha / |cos(pi alpha / 2)|`; scaling by
//! `sigma = (|cos(pi alpha / 2)| / alpha)^{1/alpha}` matches the driver.

use std::f64::consts::FRAC_PI_2;

use rand::distr::Open01;
use rand::Rng;
use rand_distr::Exp1;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

/// `C_alpha = 1/(alpha Gamma(-alpha))`, positive for `alpha` in `(1, 2)`.
pub fn levy_constant(alpha: f64) -> f64 {
    1.0 / (alpha * gamma(-alpha))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableDriverSpec {
    pub alpha: f64,
    /// Scale of the unit-time increment relative to `S(alpha, 1, 1, 0)`.
    pub scale_per_unit_time: f64,
    skew_shift: f64,
    skew_factor: f64,
}

impl StableDriverSpec {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha < 2.0) {
            return Err(Error::InvalidParams(
                "alpha must lie in open interval (1,2)".into(),
            ));
        }
        let tan = (FRAC_PI_2 * alpha).tan();
        Ok(Self {
            alpha,
            scale_per_unit_time: ((FRAC_PI_2 * alpha).cos().abs() / alpha).powf(1.0 / alpha),
            skew_shift: tan.atan() / alpha,
            skew_factor: (1.0 + tan * tan).powf(0.5 / alpha),
        })
    }

    /// One `S(alpha, 1, 1, 0)` variate; it has mean zero.
    #[inline]
    pub fn standard<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.sample(Open01);
        let v = std::f64::consts::PI * (u - 0.5);
        let w: f64 = rng.sample(Exp1);
        let a = self.alpha;
        let arg = a * (v + self.skew_shift);
        self.skew_factor * arg.sin() / v.cos().powf(1.0 / a)
            * ((v - arg).cos() / w).powf((1.0 - a) / a)
    }

    /// `L_{t+dt} - L_t`.
    #[inline]
    pub fn increment<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R) -> f64 {
        dt.powf(1.0 / self.alpha) * self.scale_per_unit_time * self.standard(rng)
    }
}

/// One increment of the driver over a step of length `dt`.
pub fn sample_stable_increment<R: Rng + ?Sized>(dt: f64, alpha: f64, rng: &mut R) -> Result<f64> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    Ok(StableDriverSpec::new(alpha)?.increment(dt, rng))
}
