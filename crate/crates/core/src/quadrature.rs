//! Adaptive Gauss-Kronrod quadrature for real and complex integrands.
//!
//! A 21-point Kronrod rule with its embedded 10-point Gauss rule is applied
//! on each interval; the interval carrying the largest error estimate is
//! bisected until the summed estimate meets `max(abs_tol, rel_tol * |I|)`.
//! The error estimate follows the QUADPACK heuristic.

use std::ops::{Add, AddAssign, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::QuadratureConfig;

/// Values that can be integrated: closed under addition and real scaling.
pub trait QuadValue:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + AddAssign
{
    const ZERO: Self;
    fn magnitude(self) -> f64;
    fn is_finite_value(self) -> bool;
}

impl QuadValue for f64 {
    const ZERO: Self = 0.0;
    #[inline]
    fn magnitude(self) -> f64 {
        self.abs()
    }
    #[inline]
    fn is_finite_value(self) -> bool {
        self.is_finite()
    }
}

impl QuadValue for Complex64 {
    const ZERO: Self = Complex64::new(0.0, 0.0);
    #[inline]
    fn magnitude(self) -> f64 {
        self.norm()
    }
    #[inline]
    fn is_finite_value(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Kronrod abscissae on [-1, 1], decreasing; odd indices are the Gauss nodes.
pub(crate) const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

pub(crate) const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_525_452_326,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Gauss weights for `XGK[1], XGK[3], .., XGK[9]`.
pub(crate) const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Integration tolerances, usually derived from [`QuadratureConfig`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_subdivisions: usize,
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64, max_subdivisions: usize) -> Self {
        Self {
            abs,
            rel,
            max_subdivisions,
        }
    }
}

impl From<&QuadratureConfig> for Tolerance {
    fn from(q: &QuadratureConfig) -> Self {
        Self::new(q.abs_tol, q.rel_tol, q.max_subdivisions)
    }
}

/// Result of an integration: value, error estimate and bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
    /// Integral of `|f|`, used by callers to judge cancellation.
    pub abs_integral: f64,
    pub evaluations: usize,
    /// Bisections performed beyond the initial partition.
    pub subdivisions: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment<T> {
    lo: f64,
    hi: f64,
    value: T,
    error: f64,
    abs: f64,
    splittable: bool,
}

/// Applies the 21-point rule on `[lo, hi]`: (value, error, integral of |f|).
pub fn gauss_kronrod_21<T, F>(f: &mut F, lo: f64, hi: f64) -> (T, f64, f64)
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let abs_half = half.abs();

    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = T::ZERO;
    let mut resabs = WGK[10] * fc.magnitude();
    let mut lower = [T::ZERO; 10];
    let mut upper = [T::ZERO; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        lower[j] = f1;
        upper[j] = f2;
        kronrod += (f1 + f2) * WGK[j];
        resabs += WGK[j] * (f1.magnitude() + f2.magnitude());
        if j % 2 == 1 {
            gauss += (f1 + f2) * WG[j / 2];
        }
    }
    let mean = kronrod * 0.5;
    let mut resasc = WGK[10] * (fc - mean).magnitude();
    for j in 0..10 {
        resasc += WGK[j] * ((lower[j] - mean).magnitude() + (upper[j] - mean).magnitude());
    }
    let value = kronrod * half;
    let resabs = resabs * abs_half;
    let resasc = resasc * abs_half;
    let mut err = ((kronrod - gauss) * half).magnitude();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (value, err, resabs)
}

/// Adaptive integration of `f` over `[lo, hi]`.
pub fn integrate<T, F>(f: F, lo: f64, hi: f64, tol: Tolerance) -> Result<Estimate<T>>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    integrate_with_breaks(f, &[lo, hi], tol)
}

/// Adaptive integration over consecutive intervals `points[i]..points[i+1]`.
///
/// Breakpoints seed the partition; use them where the integrand is known to
/// change scale. `points` must be nondecreasing with at least two entries.
/// `tol.max_subdivisions` caps the number of bisections on top of the
/// initial partition.
pub fn integrate_with_breaks<T, F>(mut f: F, points: &[f64], tol: Tolerance) -> Result<Estimate<T>>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    if points.len() < 2 {
        return Err(Error::InvalidArgument(
            "at least two integration points are required".into(),
        ));
    }
    if points.windows(2).any(|w| !(w[1] >= w[0])) || points.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidArgument(
            "integration points must be finite and nondecreasing".into(),
        ));
    }

    let mut segments: Vec<Segment<T>> = Vec::with_capacity(points.len() + 16);
    let mut evaluations = 0usize;
    for w in points.windows(2) {
        if w[1] == w[0] {
            continue;
        }
        let (value, error, abs) = gauss_kronrod_21(&mut f, w[0], w[1]);
        evaluations += 21;
        segments.push(Segment {
            lo: w[0],
            hi: w[1],
            value,
            error,
            abs,
            splittable: true,
        });
    }
    if segments.is_empty() {
        return Ok(Estimate {
            value: T::ZERO,
            error: 0.0,
            abs_integral: 0.0,
            evaluations: 0,
            subdivisions: 0,
        });
    }
    let initial = segments.len();

    loop {
        let mut total = T::ZERO;
        let mut error = 0.0;
        let mut abs_integral = 0.0;
        for s in &segments {
            total += s.value;
            error += s.error;
            abs_integral += s.abs;
        }
        if !total.is_finite_value() || !error.is_finite() {
            return Err(Error::Domain(
                "integrand produced a non-finite value".into(),
            ));
        }
        let requested = tol.abs.max(tol.rel * total.magnitude());
        if error <= requested {
            return Ok(Estimate {
                value: total,
                error,
                abs_integral,
                evaluations,
                subdivisions: segments.len() - initial,
            });
        }
        let worst = segments
            .iter()
            .enumerate()
            .filter(|(_, s)| s.splittable)
            .max_by(|(_, x), (_, y)| x.error.total_cmp(&y.error))
            .map(|(i, _)| i);
        let bisections = segments.len() - initial;
        let Some(worst) = worst.filter(|_| bisections < tol.max_subdivisions) else {
            return Err(Error::Quadrature {
                estimate: error,
                requested,
                subdivisions: bisections,
            });
        };

        let seg = segments[worst];
        let mid = 0.5 * (seg.lo + seg.hi);
        let scale = seg.lo.abs().max(seg.hi.abs());
        if seg.hi - seg.lo <= 1e3 * f64::EPSILON * scale || mid <= seg.lo || mid >= seg.hi {
            segments[worst].splittable = false;
            continue;
        }
        let (v1, e1, a1) = gauss_kronrod_21(&mut f, seg.lo, mid);
        let (v2, e2, a2) = gauss_kronrod_21(&mut f, mid, seg.hi);
        evaluations += 42;
        segments[worst] = Segment {
            lo: seg.lo,
            hi: mid,
            value: v1,
            error: e1,
            abs: a1,
            splittable: true,
        };
        segments.push(Segment {
            lo: mid,
            hi: seg.hi,
            value: v2,
            error: e2,
            abs: a2,
            splittable: true,
        });
    }
}
