//! Growth of `int_0^t v_s(rho e^{i phi}) ds` along rays, the input to the
//! decay estimates of the characteristic function.
//!
//! Near the imaginary axis the real part grows like `rho^{2-alpha}`; on rays
//! in the left half-plane the modulus is bounded by a multiple of
//! `rho^{2-alpha}`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_8, PI};

use num_complex::Complex64;

use crate::branch::riccati_v_integral;
use crate::error::{Error, Result};
use crate::params::{ModelParams, QuadratureConfig};
use crate::stats::linear_fit;

/// Half-width of the cone around `±pi/2` treated as the real-part regime,
/// and the gap `epsilon_0` to `pi/2` below which the modulus regime starts.
pub const RAY_CONE: f64 = FRAC_PI_8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `Re int v`, rays with `| |phi| - pi/2 | <= pi/8`.
    RealPart,
    /// `|int v|`, rays with `pi/2 + pi/8 <= |phi| <= pi`.
    Modulus,
}

impl Regime {
    pub fn for_angle(phi: f64) -> Result<Regime> {
        let a = phi.abs();
        if !phi.is_finite() || a > PI {
            return Err(Error::InvalidArgument(format!("ray angle {phi} outside [-pi, pi]")));
        }
        if (a - FRAC_PI_2).abs() <= RAY_CONE {
            Ok(Regime::RealPart)
        } else if a >= FRAC_PI_2 + RAY_CONE {
            Ok(Regime::Modulus)
        } else {
            Err(Error::InvalidArgument(format!(
                "ray angle {phi} is in neither regime (need ||phi| - pi/2| <= pi/8 or |phi| >= 5pi/8)"
            )))
        }
    }
}

/// `n` points from `lo` to `hi` with constant ratio.
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && hi.is_finite()) || n < 2 {
        return Err(Error::InvalidArgument(
            "geometric grid needs 0 < lo < hi and at least two points".into(),
        ));
    }
    // stepping in log10 keeps decades exact
    let (l0, l1) = (lo.log10(), hi.log10());
    let h = (l1 - l0) / (n - 1) as f64;
    Ok((0..n)
        .map(|i| match i {
            0 => lo,
            _ if i + 1 == n => hi,
            _ => 10f64.powf(l0 + h * i as f64),
        })
        .collect())
}

fn check_grid(rhos: &[f64]) -> Result<()> {
    if rhos.len() < 2 {
        return Err(Error::Regression("need at least two grid points".into()));
    }
    if !(rhos[0] >= 2.0) {
        return Err(Error::InvalidArgument(format!(
            "grid must start at rho >= 2, got {}",
            rhos[0]
        )));
    }
    let ratio = rhos[1] / rhos[0];
    for w in rhos.windows(2) {
        let r = w[1] / w[0];
        if !(r > 1.0) || ((r - ratio) / ratio).abs() > 1e-9 {
            return Err(Error::InvalidArgument("grid must be geometric and increasing".into()));
        }
    }
    Ok(())
}

/// The quantity that is regressed at one `rho`.
pub fn ray_functional(
    t: f64,
    params: &ModelParams,
    phi: f64,
    rho: f64,
    quad: &QuadratureConfig,
) -> Result<f64> {
    let regime = Regime::for_angle(phi)?;
    let z = Complex64::from_polar(rho, phi);
    let i = riccati_v_integral(t, z, params, quad)?;
    Ok(match regime {
        Regime::RealPart => i.re,
        Regime::Modulus => i.norm(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExponentFit {
    pub regime: Regime,
    pub rhos: Vec<f64>,
    pub values: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
}

impl ExponentFit {
    /// `value / rho^{2-alpha}` along the grid.
    pub fn ratios(&self, alpha: f64) -> Vec<f64> {
        self.rhos
            .iter()
            .zip(&self.values)
            .map(|(r, v)| v / r.powf(2.0 - alpha))
            .collect()
    }
}

/// Least-squares fit of `log value = intercept + slope log rho` over a
/// geometric grid starting at `rho >= 2`.
pub fn ray_exponent_fit(
    t: f64,
    params: &ModelParams,
    ray_angle: f64,
    rho_grid: &[f64],
    quad: &QuadratureConfig,
) -> Result<ExponentFit> {
    let regime = Regime::for_angle(ray_angle)?;
    check_grid(rho_grid)?;
    let values = rho_grid
        .iter()
        .map(|&r| ray_functional(t, params, ray_angle, r, quad))
        .collect::<Result<Vec<_>>>()?;
    if let Some(v) = values.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::Regression(format!(
            "cannot take the logarithm of {v}"
        )));
    }
    let lx: Vec<f64> = rho_grid.iter().map(|r| r.ln()).collect();
    let ly: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let fit = linear_fit(&lx, &ly)?;
    Ok(ExponentFit {
        regime,
        rhos: rho_grid.to_vec(),
        values,
        slope: fit.slope,
        intercept: fit.intercept,
        slope_se: fit.slope_se,
    })
}

/// Large-`rho` limit of `|int_0^t v_s ds| / rho^{2-alpha}`, the same on
/// every ray: for large `|z|` the flow is `(z^{1-alpha} + s/alpha)^{1/(1-alpha)}`
/// up to lower order, whose integral is `alpha z^{2-alpha} / (2-alpha)`.
/// Along the rays tested the ratio increases towards it.
pub fn modulus_ratio_limit(alpha: f64) -> f64 {
    alpha / (2.0 - alpha)
}

/// `(slope, intercept)` of [`ray_exponent_fit`].
pub fn appendix_exponent_check(
    t: f64,
    params: &ModelParams,
    ray_angle: f64,
    rho_grid: &[f64],
    quad: &QuadratureConfig,
) -> Result<(f64, f64)> {
    let f = ray_exponent_fit(t, params, ray_angle, rho_grid, quad)?;
    Ok((f.slope, f.intercept))
}
