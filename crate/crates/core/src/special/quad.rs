//! Globally adaptive Gauss–Kronrod (G10/K21) quadrature.
//!
//! A half line `[a, ∞)` is mapped onto `[0, 1)` by `x = a + u / (1 - u)`
//! (mirrored for `(-∞, b]`); the whole line is split at zero first. Kronrod
//! nodes never touch the endpoints, so the map is only evaluated inside.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default cap on the number of live subintervals.
pub const DEFAULT_MAX_INTERVALS: usize = 4000;

const XGK: [f64; 11] = [
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

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_525_765_016,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the odd-indexed Kronrod abscissae XGK[1], XGK[3], ...
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Values that can be integrated: real or complex.
pub trait QuadValue:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn magnitude(self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult<T> {
    pub value: T,
    pub abs_error: f64,
    pub intervals: usize,
    /// Some subintervals hit the floating-point resolution limit and were
    /// accepted with their current error estimate.
    pub roundoff_limited: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl QuadConfig {
    pub fn absolute(tol: f64) -> Self {
        Self {
            abs_tol: tol,
            rel_tol: 0.0,
            max_intervals: DEFAULT_MAX_INTERVALS,
        }
    }
}

struct Segment<T> {
    lo: f64,
    hi: f64,
    value: T,
    error: f64,
}

impl<T> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T> Eq for Segment<T> {}
impl<T> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<T: QuadValue, F: FnMut(f64) -> T>(f: &mut F, lo: f64, hi: f64) -> (T, f64) {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = T::zero();
    for j in 0..10 {
        let dx = half * XGK[j];
        let sum = f(center - dx) + f(center + dx);
        kronrod = kronrod + sum * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + sum * WG[j / 2];
        }
    }
    let value = kronrod * half;
    let error = (kronrod - gauss).magnitude() * half.abs();
    (value, error)
}

/// Integrates `f` over `[lo, hi]` (either bound may be infinite).
pub fn integrate<T, F>(mut f: F, lo: f64, hi: f64, config: QuadConfig) -> Result<QuadResult<T>>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    if lo.is_nan() || hi.is_nan() {
        return Err(Error::domain("integration bounds must not be NaN"));
    }
    if lo == hi {
        return Ok(QuadResult {
            value: T::zero(),
            abs_error: 0.0,
            intervals: 0,
            roundoff_limited: false,
        });
    }
    if lo > hi {
        let r = integrate(f, hi, lo, config)?;
        return Ok(QuadResult {
            value: r.value * -1.0,
            ..r
        });
    }
    if lo.is_finite() && hi.is_finite() {
        return adapt(&mut f, lo, hi, config);
    }
    if lo.is_infinite() && hi.is_infinite() {
        let half = QuadConfig {
            abs_tol: 0.5 * config.abs_tol,
            ..config
        };
        let left = half_line(&mut f, 0.0, -1.0, half)?;
        let right = half_line(&mut f, 0.0, 1.0, half)?;
        return Ok(QuadResult {
            value: left.value + right.value,
            abs_error: left.abs_error + right.abs_error,
            intervals: left.intervals + right.intervals,
            roundoff_limited: left.roundoff_limited || right.roundoff_limited,
        });
    }
    if lo.is_finite() {
        half_line(&mut f, lo, 1.0, config)
    } else {
        half_line(&mut f, hi, -1.0, config)
    }
}

/// Half line from `anchor` towards `sign · ∞`, via `x = anchor ± u / (1 - u)`.
fn half_line<T, F>(f: &mut F, anchor: f64, sign: f64, config: QuadConfig) -> Result<QuadResult<T>>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    let mut mapped = |u: f64| {
        let s = 1.0 - u;
        if s <= 0.0 {
            return T::zero();
        }
        f(anchor + sign * u / s) * (1.0 / (s * s))
    };
    adapt(&mut mapped, 0.0, 1.0, config)
}

fn adapt<T, F>(f: &mut F, lo: f64, hi: f64, config: QuadConfig) -> Result<QuadResult<T>>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    let (value, error) = kronrod(f, lo, hi);
    let mut heap = BinaryHeap::new();
    heap.push(Segment {
        lo,
        hi,
        value,
        error,
    });
    let mut total = value;
    let mut total_err = error;
    let mut frozen_err = 0.0;
    let mut frozen_value = T::zero();
    let mut roundoff_limited = false;

    loop {
        let target = config.abs_tol.max(config.rel_tol * total.magnitude());
        // Frozen pieces cannot improve; refine the rest down to the target.
        if total_err - frozen_err <= target {
            break;
        }
        if heap.len() >= config.max_intervals {
            return Err(Error::NonConvergence(format!(
                "adaptive quadrature on [{lo}, {hi}] hit the {}-interval limit \
                 with error estimate {total_err:.3e} (target {target:.3e})",
                config.max_intervals
            )));
        }
        let Some(worst) = heap.pop() else {
            break;
        };
        let mid = 0.5 * (worst.lo + worst.hi);
        let width = worst.hi - worst.lo;
        if mid <= worst.lo
            || mid >= worst.hi
            || width <= 64.0 * f64::EPSILON * worst.lo.abs().max(worst.hi.abs())
        {
            // Cannot be split further in floating point.
            frozen_err += worst.error;
            frozen_value = frozen_value + worst.value;
            roundoff_limited = true;
            if heap.is_empty() {
                break;
            }
            continue;
        }
        let (lv, le) = kronrod(f, worst.lo, mid);
        let (rv, re) = kronrod(f, mid, worst.hi);
        total = total - worst.value + lv + rv;
        heap.push(Segment {
            lo: worst.lo,
            hi: mid,
            value: lv,
            error: le,
        });
        heap.push(Segment {
            lo: mid,
            hi: worst.hi,
            value: rv,
            error: re,
        });
        total_err = (total_err - worst.error + le + re).max(0.0);
        if heap.len() % 64 == 0 {
            total_err = frozen_err + heap.iter().map(|s| s.error).sum::<f64>();
        }
    }

    // Re-sum from the pieces to shed accumulated update rounding.
    let mut value = frozen_value;
    for seg in heap.iter() {
        value = value + seg.value;
    }
    let total_err = frozen_err + heap.iter().map(|s| s.error).sum::<f64>();
    if roundoff_limited {
        log::debug!("quadrature on [{lo}, {hi}] accepted roundoff-limited pieces");
    }
    Ok(QuadResult {
        value,
        abs_error: total_err,
        intervals: heap.len(),
        roundoff_limited,
    })
}

/// `∫_lo^hi f(x) dx` to absolute accuracy `tol`; bounds may be infinite.
pub fn adaptive_quad<F: FnMut(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    integrate(f, lo, hi, QuadConfig::absolute(tol)).map(|r| r.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn weights_sum_to_interval_length() {
        let k: f64 = WGK[10] + 2.0 * WGK[..10].iter().sum::<f64>();
        let g: f64 = 2.0 * WG.iter().sum::<f64>();
        assert_abs_diff_eq!(k, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn polynomial() {
        let v = adaptive_quad(|x| x * x, 0.0, 1.0, 1e-10).unwrap();
        assert_abs_diff_eq!(v, 1.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn gaussian_over_real_line() {
        let v = adaptive_quad(|x| (-x * x).exp(), f64::NEG_INFINITY, f64::INFINITY, 1e-10).unwrap();
        assert_abs_diff_eq!(v, std::f64::consts::PI.sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn gamma_two_on_half_line() {
        let v = adaptive_quad(|x| x * (-x).exp(), 0.0, f64::INFINITY, 1e-10).unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn reversed_bounds_flip_sign() {
        let v = adaptive_quad(|x| x.cos(), 1.0, 0.0, 1e-12).unwrap();
        assert_abs_diff_eq!(v, -(1.0f64).sin(), epsilon = 1e-12);
    }

    #[test]
    fn endpoint_singularity() {
        let v = adaptive_quad(|x| 1.0 / x.sqrt(), 0.0, 1.0, 1e-9).unwrap();
        assert_abs_diff_eq!(v, 2.0, epsilon = 1e-8);
    }

    #[test]
    fn subdivision_limit_reported() {
        let cfg = QuadConfig {
            abs_tol: 1e-14,
            rel_tol: 0.0,
            max_intervals: 3,
        };
        let r = integrate(|x: f64| (50.0 * x).sin().abs(), 0.0, 10.0, cfg);
        assert!(matches!(r, Err(Error::NonConvergence(_))));
    }

    #[test]
    fn complex_integrand() {
        let cfg = QuadConfig::absolute(1e-12);
        let r = integrate(|x: f64| Complex64::new(0.0, x).exp(), 0.0, std::f64::consts::PI, cfg).unwrap();
        assert_abs_diff_eq!(r.value.re, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.value.im, 2.0, epsilon = 1e-12);
    }

    proptest::proptest! {
        #[test]
        fn linearity(a in -3.0f64..3.0, b in -3.0f64..3.0, k in 0.5f64..4.0) {
            let tol = 1e-10;
            let f = |x: f64| (k * x).sin() * (-x * x).exp();
            let g = |x: f64| 1.0 / (1.0 + x * x);
            let lhs = adaptive_quad(|x| a * f(x) + b * g(x), f64::NEG_INFINITY, f64::INFINITY, tol).unwrap();
            let rhs = a * adaptive_quad(f, f64::NEG_INFINITY, f64::INFINITY, tol).unwrap()
                + b * adaptive_quad(g, f64::NEG_INFINITY, f64::INFINITY, tol).unwrap();
            let scale = 1.0 + a.abs() + b.abs();
            proptest::prop_assert!((lhs - rhs).abs() <= 2.0 * tol * scale);
        }
    }
}
