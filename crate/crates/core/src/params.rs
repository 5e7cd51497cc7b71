//! Model and integration parameters.

use crate::error::{Error, Result};

/// Parameters of the two-factor model
///
/// ```text
/// dY = (a - b Y) dt + Y^{1/alpha} dL
/// dX = (m - theta X) dt + sqrt(Y) dB
/// ```
///
/// `b > 0`, `1 < alpha < 2` and `a >= 0` are enforced on construction.
/// Density operations additionally need `a > 0` and the ergodicity
/// operations need `theta > 0`; see [`ModelParams::require_density`] and
/// [`ModelParams::require_ergodic`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Drift level of `Y`.
    pub a: f64,
    /// Mean reversion speed of `Y`.
    pub b: f64,
    /// Stability index of the driver.
    pub alpha: f64,
    /// Drift level of `X`.
    pub m: f64,
    /// Mean reversion speed of `X`.
    pub theta: f64,
}

impl ModelParams {
    pub fn new(a: f64, b: f64, alpha: f64, m: f64, theta: f64) -> Result<Self> {
        let p = Self {
            a,
            b,
            alpha,
            m,
            theta,
        };
        let violations = p.violations();
        if violations.is_empty() {
            Ok(p)
        } else {
            Err(Error::InvalidParams(violations.join("; ")))
        }
    }

    /// Parameters for experiments that only involve `Y` (`m = 0`, `theta = 1`).
    pub fn alpha_root(a: f64, b: f64, alpha: f64) -> Result<Self> {
        Self::new(a, b, alpha, 0.0, 1.0)
    }

    /// Every violated base invariant, as human readable messages.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, v) in [
            ("a", self.a),
            ("b", self.b),
            ("alpha", self.alpha),
            ("m", self.m),
            ("theta", self.theta),
        ] {
            if !v.is_finite() {
                out.push(format!("{name} must be finite"));
            }
        }
        if !(self.alpha > 1.0 && self.alpha < 2.0) {
            out.push("alpha must lie in open interval (1,2)".to_string());
        }
        if !(self.b > 0.0) {
            out.push("b must be positive".to_string());
        }
        if !(self.a >= 0.0) {
            out.push("a must be nonnegative".to_string());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(v.join("; ")))
        }
    }

    pub fn require_density(&self) -> Result<()> {
        self.validate()?;
        if self.a > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidParams("density requires a > 0".into()))
        }
    }

    pub fn require_ergodic(&self) -> Result<()> {
        self.validate()?;
        if self.theta > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidParams(
                "ergodicity operations require theta > 0".into(),
            ))
        }
    }

    /// Growth rate `b (alpha - 1)` of the linearised Riccati flow.
    #[inline]
    pub fn kappa(&self) -> f64 {
        self.b * (self.alpha - 1.0)
    }

    /// `1 / (alpha b)`.
    #[inline]
    pub fn riccati_offset(&self) -> f64 {
        1.0 / (self.alpha * self.b)
    }
}

/// Tolerances and limits shared by every one-dimensional integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Cap on the number of bisections in a single adaptive integration.
    pub max_subdivisions: usize,
    /// Upper bound on the frequency cutoff of the Fourier integrals. The
    /// actual cutoff is chosen from the fitted modulus envelope and must not
    /// exceed this value.
    pub xi_truncation: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_subdivisions: 500,
            xi_truncation: 1e4,
        }
    }
}

impl QuadratureConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.abs_tol.is_finite() && self.abs_tol > 0.0) {
            out.push("abs_tol must be finite and positive".into());
        }
        if !(self.rel_tol.is_finite() && self.rel_tol > 0.0) {
            out.push("rel_tol must be finite and positive".into());
        }
        if self.max_subdivisions == 0 {
            out.push("max_subdivisions must be positive".into());
        }
        if !(self.xi_truncation > 0.0) {
            out.push("xi_truncation must be positive".into());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(v.join("; ")))
        }
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }
}
