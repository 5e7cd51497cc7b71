//! Foster-Lyapunov function `V(y, x) = beta y + h(x)` and its drift.
//!
//! `h` is a smoothed `|x|`: with a mollifier `rho` vanishing on `(-inf, 1]`
//! and equal to one on `[2, inf)`, `F(x) = int_0^x rho` and
//! `h(x) = F(|x|) + 2 - F(2)`. Then `h >= 1`, `h(x) = |x|` for `|x| >= 2`,
//! `h'(x) = sign(x) rho(|x|)` and `h''(x) = rho'(|x|)`.
//!
//! Since `V` is affine in `y` the jump part of the generator cancels and
//!
//! ```text
//! AV(y, x) = (a - b y) beta + (m - theta x) h'(x) + y h''(x) / 2
//! ```

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fmt::fmt_f64;
use crate::params::{ModelParams, QuadratureConfig};
use crate::quadrature::{integrate, integrate_with_breaks, Tolerance};
use crate::sim::{levy_constant, simulate_pair, SimConfig};
use crate::stats::mean_se;

/// Smooth `|x|` built from the logistic bump
/// `rho(x) = 1 / (1 + exp(1/(x-1) - 1/(2-x)))` on `(1, 2)`.
///
/// `rho(3 - x) = 1 - rho(x)`, so `int_1^2 rho = 1/2`, `F(2) = 1/2` and
/// `h = F(|x|) + 3/2`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SmoothAbs;

impl SmoothAbs {
    pub fn rho(&self, x: f64) -> f64 {
        if x <= 1.0 {
            0.0
        } else if x >= 2.0 {
            1.0
        } else {
            let g = 1.0 / (x - 1.0) - 1.0 / (2.0 - x);
            1.0 / (1.0 + g.exp())
        }
    }

    pub fn rho_prime(&self, x: f64) -> f64 {
        if x <= 1.0 || x >= 2.0 {
            return 0.0;
        }
        let g = 1.0 / (x - 1.0) - 1.0 / (2.0 - x);
        if g.abs() > 700.0 {
            return 0.0;
        }
        let dg = -1.0 / (x - 1.0).powi(2) - 1.0 / (2.0 - x).powi(2);
        let e = g.exp();
        -dg * e / (1.0 + e).powi(2)
    }

    /// `F(x) = int_0^x rho`.
    pub fn big_f(&self, x: f64) -> f64 {
        if x <= 1.0 {
            0.0
        } else if x >= 2.0 {
            x - 1.5
        } else if x <= 1.5 {
            integrate(|s| self.rho(s), 1.0, x, Tolerance::new(1e-15, 1e-14, 100))
                .map(|e| e.value)
                .unwrap_or(f64::NAN)
        } else {
            // symmetry keeps the integration interval short
            (x - 1.5) + self.big_f(3.0 - x)
        }
    }

    pub fn h(&self, x: f64) -> f64 {
        self.big_f(x.abs()) + 1.5
    }

    pub fn h_prime(&self, x: f64) -> f64 {
        x.signum() * self.rho(x.abs())
    }

    pub fn h_second(&self, x: f64) -> f64 {
        self.rho_prime(x.abs())
    }

    /// `sup |h''| = sup rho'`, located by golden-section search.
    pub fn sup_h_second(&self) -> f64 {
        let (mut lo, mut hi) = (1.0f64, 2.0f64);
        let r = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..100 {
            let m1 = hi - r * (hi - lo);
            let m2 = lo + r * (hi - lo);
            if self.rho_prime(m1) < self.rho_prime(m2) {
                lo = m1;
            } else {
                hi = m2;
            }
        }
        self.rho_prime(0.5 * (lo + hi))
    }
}

/// `V(y, x) = beta y + h(x)` with constants of the drift inequality
/// `AV <= -c V + M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovSpec {
    pub beta: f64,
    pub h: SmoothAbs,
    pub c: f64,
    pub m_bound: f64,
}

impl LyapunovSpec {
    pub fn v(&self, y: f64, x: f64) -> f64 {
        self.beta * y + self.h.h(x)
    }
}

/// `AV(y, x)` in closed form.
pub fn generator_on_v(y: f64, x: f64, spec: &LyapunovSpec, params: &ModelParams) -> f64 {
    let h = &spec.h;
    (params.a - params.b * y) * spec.beta
        + (params.m - params.theta * x) * h.h_prime(x)
        + 0.5 * y * h.h_second(x)
}

/// The pieces from which `M` is assembled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftCertificate {
    /// `beta (c - b) + sup h'' / 2`; must be `<= 0` so the bound is worst
    /// at `y = 0`.
    pub y_coefficient: f64,
    /// Bound of `(m - theta x) h'(x) + c h(x)` over `|x| >= 2`:
    /// `|m| + 2 (c - theta)`, valid because `c <= theta`.
    pub outer_bound: f64,
    /// Cell-wise Lipschitz bound of the same expression over `|x| <= 2`.
    pub inner_bound: f64,
    pub cells: usize,
}

/// Number of Lipschitz cells on `[-2, 2]`.
const CERT_CELLS: usize = 4096;

/// Chooses `c = min(b/2, theta)`, `beta = max(1, sup h'' / b)` and a
/// certified `M`.
pub fn choose_beta_c_m(params: &ModelParams, h: SmoothAbs) -> Result<(LyapunovSpec, DriftCertificate)> {
    params.require_ergodic()?;
    let c = (params.b / 2.0).min(params.theta);
    let sup2 = h.sup_h_second();
    let beta = 1f64.max(sup2 / params.b);
    let y_coefficient = beta * (c - params.b) + 0.5 * sup2;
    if y_coefficient > 0.0 {
        return Err(Error::Domain(format!(
            "drift coefficient of y is positive ({y_coefficient})"
        )));
    }

    let g = |x: f64| (params.m - params.theta * x) * h.h_prime(x) + c * h.h(x);
    let lip = params.theta + (params.m.abs() + 2.0 * params.theta) * sup2 + c;
    let width = 4.0 / CERT_CELLS as f64;
    let inner_bound = (0..=CERT_CELLS)
        .into_par_iter()
        .map(|i| g(-2.0 + i as f64 * width))
        .reduce(|| f64::NEG_INFINITY, f64::max)
        + 0.5 * lip * width;
    let outer_bound = params.m.abs() + 2.0 * (c - params.theta);
    let m_bound = params.a * beta + inner_bound.max(outer_bound);
    Ok((
        LyapunovSpec {
            beta,
            h,
            c,
            m_bound,
        },
        DriftCertificate {
            y_coefficient,
            outer_bound,
            inner_bound,
            cells: CERT_CELLS,
        },
    ))
}

/// Largest `AV + cV - M` over an `n x n` grid of `[0, y_max] x [-x_max, x_max]`;
/// nonpositive when the inequality holds on the grid.
pub fn certify_on_grid(
    spec: &LyapunovSpec,
    params: &ModelParams,
    y_max: f64,
    x_max: f64,
    n: usize,
) -> f64 {
    let n = n.max(2);
    (0..n * n)
        .into_par_iter()
        .map(|k| {
            let y = y_max * (k / n) as f64 / (n - 1) as f64;
            let x = -x_max + 2.0 * x_max * (k % n) as f64 / (n - 1) as f64;
            generator_on_v(y, x, spec, params) + spec.c * spec.v(y, x) - spec.m_bound
        })
        .reduce(|| f64::NEG_INFINITY, f64::max)
}

/// Test function for [`levy_jump_integral`].
pub trait JumpTestFunction {
    fn value(&self, y: f64) -> f64;
    fn derivative(&self, y: f64) -> f64;
    /// `f(y + j) - f(y) - f'(y) j`, ideally free of cancellation for small `j`.
    fn remainder(&self, y: f64, j: f64) -> f64 {
        self.value(y + j) - self.value(y) - self.derivative(y) * j
    }
}

/// `e^{-lambda y}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpTest {
    pub lambda: f64,
}

impl JumpTestFunction for ExpTest {
    fn value(&self, y: f64) -> f64 {
        (-self.lambda * y).exp()
    }
    fn derivative(&self, y: f64) -> f64 {
        -self.lambda * self.value(y)
    }
    fn remainder(&self, y: f64, j: f64) -> f64 {
        self.value(y) * exp_m1_m_x(-self.lambda * j)
    }
}

/// `e^x - 1 - x` without cancellation near zero.
fn exp_m1_m_x(x: f64) -> f64 {
    if x.abs() > 0.1 {
        return x.exp_m1() - x;
    }
    let mut term = 0.5 * x * x;
    let mut sum = term;
    for k in 3..30 {
        term *= x / k as f64;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// `T_K(y) = y - K F(y / K)`: equal to `y` below `K`, constant `1.5 K`
/// above `2K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedIdentity {
    pub k: f64,
    pub h: SmoothAbs,
}

impl JumpTestFunction for TruncatedIdentity {
    fn value(&self, y: f64) -> f64 {
        y - self.k * self.h.big_f(y / self.k)
    }
    fn derivative(&self, y: f64) -> f64 {
        1.0 - self.h.rho(y / self.k)
    }
    fn remainder(&self, y: f64, j: f64) -> f64 {
        if y <= self.k {
            -self.k * self.h.big_f((y + j) / self.k)
        } else {
            self.value(y + j) - self.value(y) - self.derivative(y) * j
        }
    }
}

/// Numerical jump part of the generator,
/// `int_0^inf [f(y + s z) - f(y) - f'(y) s z] C_alpha z^{-1-alpha} dz`
/// with `s = y^{1/alpha}`.
///
/// `z = u^{1/(2-alpha)}` regularises `(0, 1]`; on `[1, inf)` the compensator
/// terms are integrated in closed form and `z = e^u` is used for the rest.
/// `breaks` lists `z` values where `f` changes behaviour.
pub fn levy_jump_integral<T: JumpTestFunction>(
    y: f64,
    alpha: f64,
    f: &T,
    breaks: &[f64],
    quad: &QuadratureConfig,
) -> Result<f64> {
    if !(y.is_finite() && y >= 0.0) {
        return Err(Error::InvalidArgument(format!("y must be nonnegative, got {y}")));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    let c = levy_constant(alpha);
    let s = y.powf(1.0 / alpha);
    let (fy, dfy) = (f.value(y), f.derivative(y));
    let tol = Tolerance::from(quad);
    let p = 2.0 - alpha;

    let mut head_pts = vec![0.0];
    head_pts.extend(breaks.iter().filter(|&&z| z > 0.0 && z < 1.0).map(|z| z.powf(p)));
    head_pts.push(1.0);
    head_pts.sort_by(f64::total_cmp);
    let head = integrate_with_breaks(
        |u: f64| {
            let z = u.powf(1.0 / p);
            if z == 0.0 {
                return 0.0;
            }
            f.remainder(y, s * z) * z.powi(-2) * c / p
        },
        &head_pts,
        tol,
    )?
    .value;

    // f itself on [1, inf), in u = ln z, truncated once e^{-alpha u} sup|f| is negligible
    let sup_f = sup_along_ray(f, y, s, breaks);
    let u_max = ((sup_f.max(1.0) / quad.abs_tol).ln() / alpha).max(1.0) + 5.0;
    let mut tail_pts = vec![0.0];
    tail_pts.extend(breaks.iter().filter(|&&z| z > 1.0).map(|z| z.ln()).filter(|&u| u < u_max));
    let mut u = 1.0;
    while u < u_max {
        tail_pts.push(u);
        u += 1.0;
    }
    tail_pts.push(u_max);
    tail_pts.sort_by(f64::total_cmp);
    tail_pts.dedup();
    let tail = integrate_with_breaks(
        |u: f64| f.value(y + s * u.exp()) * c * (-alpha * u).exp(),
        &tail_pts,
        tol,
    )?
    .value;
    Ok(head + tail - c * fy / alpha - c * dfy * s / (alpha - 1.0))
}

/// Crude bound on `|f|` along the jump ray, used to pick the truncation of
/// the tail integral.
fn sup_along_ray<T: JumpTestFunction>(f: &T, y: f64, s: f64, breaks: &[f64]) -> f64 {
    let mut m = f.value(y).abs();
    let mut z = 1.0;
    for _ in 0..64 {
        m = m.max(f.value(y + s * z).abs());
        z *= 2.0;
    }
    for &b in breaks {
        m = m.max(f.value(y + s * b).abs());
    }
    m
}

/// Jump integral of `T_K` at `y < K`, together with the analytic bound
/// `C_alpha [s z0^{1-alpha}/(alpha-1) - (K-y) z0^{-alpha}/alpha]`,
/// `z0 = (K-y)/s`, on its modulus. `T_K` is locally the identity, so the
/// closed-form generator applies up to this term.
pub fn truncated_jump_check(
    y: f64,
    k: f64,
    alpha: f64,
    quad: &QuadratureConfig,
) -> Result<(f64, f64)> {
    if !(y > 0.0 && y < k) {
        return Err(Error::InvalidArgument("need 0 < y < K".into()));
    }
    let s = y.powf(1.0 / alpha);
    let z0 = (k - y) / s;
    let z2 = (2.0 * k - y) / s;
    let f = TruncatedIdentity { k, h: SmoothAbs };
    let value = levy_jump_integral(y, alpha, &f, &[z0, z2], quad)?;
    let c = levy_constant(alpha);
    let bound = c * (s * z0.powf(1.0 - alpha) / (alpha - 1.0) - (k - y) * z0.powf(-alpha) / alpha);
    Ok((value, bound))
}

/// Outcome of the Monte Carlo drift check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftCheck {
    pub y0: f64,
    pub x0: f64,
    pub t: f64,
    /// Monte Carlo estimate of `E V(Y_t, X_t)`.
    pub lhs: f64,
    pub se: f64,
    /// `e^{-ct} V(y0, x0) + M / c`.
    pub rhs: f64,
    /// Euler bias allowance `dt (1 + V(y0, x0))`.
    pub allowance: f64,
    pub pass: bool,
}

impl DriftCheck {
    pub fn write_csv<W: Write>(checks: &[DriftCheck], mut w: W) -> std::io::Result<()> {
        writeln!(w, "y0,x0,t,lhs,rhs,pass")?;
        for c in checks {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                fmt_f64(c.y0),
                fmt_f64(c.x0),
                fmt_f64(c.t),
                fmt_f64(c.lhs),
                fmt_f64(c.rhs),
                c.pass
            )?;
        }
        Ok(())
    }
}

/// Checks `E V(Y_t, X_t) <= e^{-ct} V(y0, x0) + M/c` by simulation; the
/// horizon of `sim` is replaced by `t`.
pub fn drift_mc_check(
    y0: f64,
    x0: f64,
    t: f64,
    spec: &LyapunovSpec,
    params: &ModelParams,
    sim: &SimConfig,
) -> Result<DriftCheck> {
    params.require_ergodic()?;
    let v0 = spec.v(y0, x0);
    let rhs = (-spec.c * t).exp() * v0 + spec.m_bound / spec.c;
    if t == 0.0 {
        return Ok(DriftCheck {
            y0,
            x0,
            t,
            lhs: v0,
            se: 0.0,
            rhs,
            allowance: 0.0,
            pass: v0 <= rhs,
        });
    }
    let cfg = SimConfig {
        horizon: t,
        ..sim.clone()
    };
    let ens = simulate_pair(y0, x0, params, &cfg)?;
    let vs: Vec<f64> = ens
        .terminal_y()
        .iter()
        .zip(ens.terminal_x())
        .map(|(&y, &x)| spec.v(y, x))
        .collect();
    let (lhs, se) = mean_se(&vs);
    let allowance = cfg.dt * (1.0 + v0);
    Ok(DriftCheck {
        y0,
        x0,
        t,
        lhs,
        se,
        rhs,
        allowance,
        pass: lhs <= rhs + 3.0 * se + allowance,
    })
}
