//! Standardized Pearson type IV distribution (zero mean, unit variance).
//!
//! With `x = σ̂z + μ̂`, `μ̂ = -ν/(m-1)` and
//! `σ̂ = sqrt((1 + ν²/(m-1)²) / (m-2))` the density is
//!
//! ```text
//! p(z) = σ̂ Γ((m+1)/2) |Γ((m+1)/2 + iν/2) / Γ((m+1)/2)|²
//!        / (√π Γ(m/2)) · exp(-ν atan x) · (1 + x²)^{-(m+1)/2}
//! ```
//!
//! The normalization constant is built in log form from the terms above.
//!
//! The distribution function is evaluated in closed form through the Gauss
//! hypergeometric function, in three regions of `x`:
//!
//! - lower tail, `x < -X_C`:
//!   `P = Re[p(z) (i - x)/(σ̂m) ₂F₁(1, (m+1)/2 + iν/2; m+1; 2/(1 - ix))]`;
//! - upper tail, `x > X_C`: the reflection `P(z | ν) = 1 - P(-z | -ν)`, which
//!   lands in the lower tail of the mirrored distribution;
//! - centre, `|x| ≤ X_C`:
//!   `P = Re[p(z) i(1+x²)/(σ̂(m-1-iν)) ₂F₁(1, 1-m; (3-m)/2 + iν/2; (1+ix)/2)
//!   + 1/(1 - exp(-π(ν + i(m+1))))]`.
//!
//! `X_C = sqrt(2.24)` is where the central argument reaches `|w| = 0.9`, so
//! the central series never runs near its unit circle; on
//! `X_C < |x| < √3` the tail formula is used with the Euler-integral
//! evaluation of ₂F₁. At `ν = 0` with odd integer `m` the central formula is
//! singular (its constant term and its `c` parameter both blow up); there the
//! centre is obtained by integrating the density from the nearest tail
//! boundary.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::special::{hyp2f1, integrate, ln_gamma_ratio_sq, QuadConfig};

/// Half-width in `x` of the central region.
pub const CENTRAL_HALF_WIDTH: f64 = 1.496_662_954_709_576_4; // sqrt(2.24)

/// Below this `|1 - exp(-π(ν + i(m+1)))|` the central formula is treated as
/// singular.
const CENTRAL_DEGENERACY: f64 = 1e-4;

const QUAD_TOL: f64 = 1e-13;

/// Which closed form evaluates the distribution function at a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdfRegion {
    LowerTail,
    Central,
    UpperTail,
}

/// Shape parameters of the standardized Pearson IV plus derived constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpivParams {
    m: f64,
    nu: f64,
    mu_hat: f64,
    sigma_hat: f64,
    ln_norm: f64,
}

impl SpivParams {
    /// Requires `m > 2` so that the unit-variance standardization exists.
    pub fn new(m: f64, nu: f64) -> Result<Self> {
        if !m.is_finite() || !nu.is_finite() {
            return Err(Error::domain(format!(
                "SPIV parameters must be finite (m = {m}, nu = {nu})"
            )));
        }
        if m <= 0.5 {
            return Err(Error::domain(format!(
                "SPIV needs m > 2; m = {m} <= 1/2 is not even normalizable"
            )));
        }
        if m <= 2.0 {
            return Err(Error::domain(format!(
                "SPIV needs m > 2; m = {m} is normalizable but has no finite variance to standardize"
            )));
        }
        let mu_hat = -nu / (m - 1.0);
        let r = nu / (m - 1.0);
        let sigma_hat = ((1.0 + r * r) / (m - 2.0)).sqrt();
        let h = 0.5 * (m + 1.0);
        let ln_norm = sigma_hat.ln() + ln_gamma(h) - ln_gamma(0.5 * m) - 0.5 * PI.ln()
            + ln_gamma_ratio_sq(h, 0.5 * nu)?;
        Ok(Self {
            m,
            nu,
            mu_hat,
            sigma_hat,
            ln_norm,
        })
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn mu_hat(&self) -> f64 {
        self.mu_hat
    }

    pub fn sigma_hat(&self) -> f64 {
        self.sigma_hat
    }

    /// Log of the normalization constant (including the `σ̂` Jacobian).
    pub fn ln_norm(&self) -> f64 {
        self.ln_norm
    }

    /// The mirror image `ν → -ν` (density `p(-z)`).
    pub fn reflected(&self) -> Self {
        Self {
            nu: -self.nu,
            mu_hat: -self.mu_hat,
            ..*self
        }
    }

    #[inline]
    fn shifted(&self, z: f64) -> f64 {
        self.sigma_hat * z + self.mu_hat
    }

    #[inline]
    pub fn logpdf(&self, z: f64) -> f64 {
        let x = self.shifted(z);
        let ln_1px2 = if x.abs() < 1e100 {
            (x * x).ln_1p()
        } else {
            2.0 * x.abs().ln()
        };
        self.ln_norm - 0.5 * (self.m + 1.0) * ln_1px2 - self.nu * x.atan()
    }

    #[inline]
    pub fn pdf(&self, z: f64) -> f64 {
        self.logpdf(z).exp()
    }

    pub fn region(&self, z: f64) -> CdfRegion {
        let x = self.shifted(z);
        if x < -CENTRAL_HALF_WIDTH {
            CdfRegion::LowerTail
        } else if x > CENTRAL_HALF_WIDTH {
            CdfRegion::UpperTail
        } else {
            CdfRegion::Central
        }
    }

    /// `P(Z ≤ z)`.
    pub fn cdf(&self, z: f64) -> Result<f64> {
        if z.is_nan() {
            return Err(Error::domain("SPIV cdf of NaN"));
        }
        if z == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        if z == f64::INFINITY {
            return Ok(1.0);
        }
        let p = match self.region(z) {
            CdfRegion::LowerTail => self.cdf_tail_formula(z)?,
            CdfRegion::UpperTail => self.cdf_reflected(z)?,
            CdfRegion::Central => {
                if self.central_is_degenerate() {
                    self.cdf_central_by_integration(z)?
                } else {
                    self.cdf_central_formula(z)?
                }
            }
        };
        Ok(p.clamp(0.0, 1.0))
    }

    /// The lower-tail closed form. Valid for every `x < 0` by analytic
    /// continuation; absolutely convergent series for `x < -√3`.
    pub fn cdf_tail_formula(&self, z: f64) -> Result<f64> {
        let x = self.shifted(z);
        if x >= 0.0 {
            return Err(Error::domain(format!(
                "lower-tail CDF formula needs σ̂z + μ̂ < 0, got {x}"
            )));
        }
        let pdf = self.pdf(z);
        if pdf == 0.0 {
            return Ok(0.0);
        }
        let i = Complex64::new(0.0, 1.0);
        let one = Complex64::new(1.0, 0.0);
        let b = Complex64::new(0.5 * (self.m + 1.0), 0.5 * self.nu);
        let c = Complex64::new(self.m + 1.0, 0.0);
        let w = Complex64::new(2.0, 0.0) / (one - i * x);
        let f = hyp2f1(one, b, c, w)?;
        let v = pdf * ((i - x) / (self.sigma_hat * self.m) * f);
        Ok(v.re)
    }

    /// `1 - P(-z | m, -ν)`.
    pub fn cdf_reflected(&self, z: f64) -> Result<f64> {
        Ok(1.0 - self.reflected().cdf_tail_formula(-z)?)
    }

    /// Whether the central closed form is singular at these shape parameters.
    pub fn central_is_degenerate(&self) -> bool {
        self.central_denominator().norm() < CENTRAL_DEGENERACY
    }

    fn central_denominator(&self) -> Complex64 {
        let e = Complex64::new(-PI * self.nu, -PI * (self.m + 1.0)).exp();
        Complex64::new(1.0, 0.0) - e
    }

    /// The central closed form; fails when [`Self::central_is_degenerate`].
    pub fn cdf_central_formula(&self, z: f64) -> Result<f64> {
        let denom = self.central_denominator();
        if denom.norm() < CENTRAL_DEGENERACY {
            return Err(Error::domain(format!(
                "central CDF formula is singular at m = {}, nu = {}",
                self.m, self.nu
            )));
        }
        let x = self.shifted(z);
        let i = Complex64::new(0.0, 1.0);
        let one = Complex64::new(1.0, 0.0);
        let b = Complex64::new(1.0 - self.m, 0.0);
        let c = Complex64::new(0.5 * (3.0 - self.m), 0.5 * self.nu);
        let w = (one + i * x) * 0.5;
        let f = hyp2f1(one, b, c, w)?;
        let lead = i / (self.sigma_hat * Complex64::new(self.m - 1.0, -self.nu));
        let v = self.pdf(z) * (1.0 + x * x) * lead * f + one / denom;
        Ok(v.re)
    }

    fn cdf_central_by_integration(&self, z: f64) -> Result<f64> {
        let z_lo = (-CENTRAL_HALF_WIDTH - self.mu_hat) / self.sigma_hat;
        let z_hi = (CENTRAL_HALF_WIDTH - self.mu_hat) / self.sigma_hat;
        let cfg = QuadConfig::absolute(QUAD_TOL);
        if self.shifted(z) <= 0.0 {
            let base = self.cdf_tail_formula(z_lo)?;
            let mass = integrate(|t| self.pdf(t), z_lo, z, cfg)?.value;
            Ok(base + mass)
        } else {
            let base = self.cdf_reflected(z_hi)?;
            let mass = integrate(|t| self.pdf(t), z, z_hi, cfg)?.value;
            Ok(base - mass)
        }
    }

    /// The `z` with `P(Z ≤ z) = a`.
    pub fn quantile(&self, a: f64) -> Result<f64> {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::domain(format!(
                "quantile level must lie in (0, 1), got {a}"
            )));
        }
        let z0 = self.initial_guess(a);
        let f0 = self.cdf(z0)? - a;
        if f0 == 0.0 {
            return Ok(z0);
        }
        // Bracket [lo, hi] with F(lo) < a <= F(hi).
        let mut step = z0.abs().max(1.0) * 0.25;
        let (mut lo, mut hi) = if f0 < 0.0 {
            let mut lo = z0;
            let mut hi = z0 + step;
            while self.cdf(hi)? < a {
                lo = hi;
                step *= 2.0;
                hi += step;
                if !hi.is_finite() {
                    return Err(Error::NumericFault(format!("quantile bracket diverged at a = {a}")));
                }
            }
            (lo, hi)
        } else {
            let mut hi = z0;
            let mut lo = z0 - step;
            while self.cdf(lo)? >= a {
                hi = lo;
                step *= 2.0;
                lo -= step;
                if !lo.is_finite() {
                    return Err(Error::NumericFault(format!("quantile bracket diverged at a = {a}")));
                }
            }
            (lo, hi)
        };

        let mut z = z0.clamp(lo, hi);
        for _ in 0..200 {
            let f = self.cdf(z)? - a;
            if f.abs() <= 1e-16 {
                return Ok(z);
            }
            if f < 0.0 {
                lo = z;
            } else {
                hi = z;
            }
            let d = self.pdf(z);
            let newton = if d > 0.0 { z - f / d } else { f64::NAN };
            let next = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (next - z).abs() <= 1e-15 * (1.0 + z.abs()) || hi - lo <= 1e-15 * (1.0 + z.abs()) {
                return Ok(next);
            }
            z = next;
        }
        Err(Error::NonConvergence(format!(
            "SPIV quantile at a = {a} did not settle (bracket [{lo}, {hi}])"
        )))
    }

    fn initial_guess(&self, a: f64) -> f64 {
        let t = StudentsT::new(0.0, 1.0, self.m)
            .map(|d| d.inverse_cdf(a))
            .unwrap_or(0.0);
        let scaled = t * ((self.m - 2.0) / self.m).sqrt();
        if scaled.is_finite() {
            scaled
        } else {
            0.0
        }
    }

    /// `n` draws by inverse transform of uniforms from a ChaCha8 stream.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let uniforms: Vec<f64> = (0..n).map(|_| open_unit(&mut rng)).collect();
        uniforms.par_iter().map(|&u| self.quantile(u)).collect()
    }

    /// `E[(|Z| - γZ)^δ]`, the moment entering the APARCH persistence.
    ///
    /// Exists iff `δ < m`, since the density decays like `|z|^{-(m+1)}`.
    pub fn power_expectation(&self, gamma: f64, delta: f64) -> Result<f64> {
        if !(gamma.abs() < 1.0) {
            return Err(Error::domain(format!("power moment needs |gamma| < 1, got {gamma}")));
        }
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::domain(format!("power moment needs delta > 0, got {delta}")));
        }
        if delta >= self.m {
            return Err(Error::Divergence(format!(
                "E(|z| - gamma z)^delta needs delta < m (tail exponent m + 1); delta = {delta}, m = {}",
                self.m
            )));
        }
        let cfg = QuadConfig {
            abs_tol: 1e-11,
            rel_tol: 1e-12,
            max_intervals: 4000,
        };
        // |z| > 1 runs in v = ln|z|, where the algebraic tail decays exponentially.
        let half = |side: f64| -> Result<f64> {
            let core = integrate(|z: f64| z.powf(delta) * self.pdf(side * z), 0.0, 1.0, cfg)?.value;
            let tail = integrate(
                |v: f64| {
                    let ln = (delta + 1.0) * v + self.logpdf(side * v.exp());
                    if ln.is_nan() {
                        0.0
                    } else {
                        ln.exp()
                    }
                },
                0.0,
                f64::INFINITY,
                cfg,
            )?
            .value;
            Ok(core + tail)
        };
        let left = half(-1.0)?;
        let right = half(1.0)?;
        Ok((1.0 + gamma).powf(delta) * left + (1.0 - gamma).powf(delta) * right)
    }
}

/// Uniform on the open interval (0, 1).
pub(crate) fn open_unit<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use statrs::distribution::{Continuous, StudentsT};

    fn quad_cdf(p: &SpivParams, z: f64) -> f64 {
        integrate(|t| p.pdf(t), f64::NEG_INFINITY, z, QuadConfig::absolute(1e-14))
            .unwrap()
            .value
    }

    /// Unit-variance Student-t with `m` degrees of freedom.
    fn unit_t(m: f64) -> (StudentsT, f64) {
        (StudentsT::new(0.0, 1.0, m).unwrap(), (m / (m - 2.0)).sqrt())
    }

    #[test]
    fn standardization_constants() {
        let p = SpivParams::new(5.0, 0.0).unwrap();
        assert_eq!(p.mu_hat(), 0.0);
        assert_abs_diff_eq!(p.sigma_hat(), (1.0f64 / 3.0).sqrt(), epsilon = 1e-15);

        let p = SpivParams::new(5.6275, 0.4748).unwrap();
        let r: f64 = 0.4748 / 4.6275;
        assert_abs_diff_eq!(p.mu_hat(), -r, epsilon = 1e-15);
        assert_abs_diff_eq!(p.sigma_hat(), ((1.0 + r * r) / 3.6275).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(p.mu_hat(), -0.102_604, epsilon = 1e-6);
        assert_abs_diff_eq!(p.sigma_hat(), 0.527_801, epsilon = 1e-6);
    }

    #[test]
    fn rejects_small_m() {
        let e = SpivParams::new(2.0, 0.0).unwrap_err().to_string();
        assert!(e.contains("no finite variance"), "{e}");
        let e = SpivParams::new(0.4, 0.0).unwrap_err().to_string();
        assert!(e.contains("normalizable"), "{e}");
    }

    #[test]
    fn symmetric_density_at_zero() {
        let p = SpivParams::new(5.0, 0.0).unwrap();
        let expect = (ln_gamma(3.0) - ln_gamma(2.5)).exp() / (3.0 * PI).sqrt();
        assert_abs_diff_eq!(p.pdf(0.0), expect, epsilon = 1e-15);
        assert_abs_diff_eq!(p.pdf(0.0), 0.490_070_129_263_815, epsilon = 1e-12);
        for z in [0.5, 1.0, 3.0] {
            assert_abs_diff_eq!(p.pdf(z), p.pdf(-z), epsilon = 1e-16);
        }
    }

    #[test]
    fn density_integrates_to_one() {
        for (m, nu) in [(3.0, -1.0), (5.0, 0.0), (5.6275, 0.4748), (10.0, 2.0)] {
            let p = SpivParams::new(m, nu).unwrap();
            let total = integrate(|z| p.pdf(z), f64::NEG_INFINITY, f64::INFINITY, QuadConfig::absolute(1e-12))
                .unwrap()
                .value;
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn cdf_examples() {
        let p = SpivParams::new(5.0, 0.0).unwrap();
        assert_abs_diff_eq!(p.cdf(0.0).unwrap(), 0.5, epsilon = 1e-13);
        let (t, s) = unit_t(5.0);
        assert_abs_diff_eq!(p.cdf(1.5).unwrap(), t.cdf(1.5 * s), epsilon = 1e-10);

        let p = SpivParams::new(5.6275, 0.4748).unwrap();
        assert_abs_diff_eq!(p.cdf(-2.0).unwrap(), quad_cdf(&p, -2.0), epsilon = 1e-10);
    }

    #[test]
    fn regions_agree_at_boundaries() {
        for (m, nu) in [(2.5, 1.0), (5.6275, 0.4748), (4.2, -3.0), (12.0, 5.0)] {
            let p = SpivParams::new(m, nu).unwrap();
            for xb in [-CENTRAL_HALF_WIDTH, CENTRAL_HALF_WIDTH, -3f64.sqrt(), 3f64.sqrt(), -1.9845, 1.9845] {
                for dx in [-0.01, 0.0, 0.01] {
                    let x: f64 = xb + dx;
                    let z = (x - p.mu_hat()) / p.sigma_hat();
                    let q = quad_cdf(&p, z);
                    if x.abs() <= CENTRAL_HALF_WIDTH + 0.011 {
                        let central = p.cdf_central_formula(z).unwrap();
                        assert!((central - q).abs() < 1e-9, "central m={m} nu={nu} x={x}: {central} vs {q}");
                    }
                    if x < 0.0 {
                        let tail = p.cdf_tail_formula(z).unwrap();
                        assert!((tail - q).abs() < 1e-9, "tail m={m} nu={nu} x={x}: {tail} vs {q}");
                    } else {
                        let refl = p.cdf_reflected(z).unwrap();
                        assert!((refl - q).abs() < 1e-9, "refl m={m} nu={nu} x={x}: {refl} vs {q}");
                    }
                }
            }
        }
    }

    #[test]
    fn degenerate_central_region() {
        for m in [3.0, 5.0, 7.0] {
            let p = SpivParams::new(m, 0.0).unwrap();
            assert!(p.central_is_degenerate());
            assert!(p.cdf_central_formula(0.1).is_err());
            let (t, s) = unit_t(m);
            for z in [-1.2, -0.3, 0.0, 0.4, 1.9] {
                assert_abs_diff_eq!(p.cdf(z).unwrap(), t.cdf(z * s), epsilon = 1e-11);
            }
        }
        // Close to, but outside, the degenerate set the closed form still holds.
        let p = SpivParams::new(5.0, 1e-3).unwrap();
        assert!(!p.central_is_degenerate());
        for z in [-1.0, 0.0, 1.0] {
            assert_abs_diff_eq!(p.cdf(z).unwrap(), quad_cdf(&p, z), epsilon = 1e-10);
        }
    }

    #[test]
    fn quantile_examples() {
        let p = SpivParams::new(5.0, 0.0).unwrap();
        assert_abs_diff_eq!(p.quantile(0.5).unwrap(), 0.0, epsilon = 1e-12);
        let (t, s) = unit_t(5.0);
        let expect = t.inverse_cdf(0.05) / s;
        assert_abs_diff_eq!(p.quantile(0.05).unwrap(), expect, epsilon = 1e-9);
        assert_abs_diff_eq!(expect, -1.5608, epsilon = 1e-4);
        assert!(p.quantile(0.0).is_err());
        assert!(p.quantile(1.0).is_err());
    }

    #[test]
    fn quantile_roundtrip() {
        let p = SpivParams::new(5.6275, 0.4748).unwrap();
        for a in [0.001, 0.01, 0.05, 0.95, 0.99, 0.999] {
            let z = p.quantile(a).unwrap();
            assert_abs_diff_eq!(p.cdf(z).unwrap(), a, epsilon = 1e-12);
        }
    }

    #[test]
    fn standardized_quantiles_at_fitted_shape() {
        // Standardized quantiles at the published WTI shape estimates.
        let p = SpivParams::new(5.6275, 0.4748).unwrap();
        let table = [
            (0.05, -1.6187),
            (0.025, -2.0707),
            (0.01, -2.7090),
            (0.005, -3.2373),
            (0.0025, -3.8161),
            (0.001, -4.6757),
            (0.95, 1.5356),
            (0.975, 1.9186),
            (0.99, 2.4472),
            (0.995, 2.8771),
            (0.9975, 3.3424),
            (0.999, 4.0262),
        ];
        for (a, q) in table {
            assert_abs_diff_eq!(p.quantile(a).unwrap(), q, epsilon = 1e-4);
        }
    }

    #[test]
    fn sampling_moments_and_determinism() {
        let p = SpivParams::new(5.0, 0.0).unwrap();
        let n = 100_000;
        let xs = p.sample(n, 42).unwrap();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "var {var}");
        assert_eq!(p.sample(50, 9).unwrap(), p.sample(50, 9).unwrap());
        assert_ne!(p.sample(50, 9).unwrap(), p.sample(50, 10).unwrap());
    }

    #[test]
    fn sample_ks_distance() {
        let p = SpivParams::new(5.6275, 0.4748).unwrap();
        let n = 100_000;
        let mut xs = p.sample(n, 7).unwrap();
        xs.sort_by(f64::total_cmp);
        let mut d: f64 = 0.0;
        for (i, &x) in xs.iter().enumerate() {
            let f = p.cdf(x).unwrap();
            d = d.max(((i + 1) as f64 / n as f64 - f).abs()).max((f - i as f64 / n as f64).abs());
        }
        assert!(d < 1.95 / (n as f64).sqrt(), "KS distance {d}");
    }

    #[test]
    fn power_expectation_examples() {
        for (m, nu) in [(2.5, 0.0), (5.0, 0.0), (5.6275, 0.4748), (10.0, -2.0)] {
            let p = SpivParams::new(m, nu).unwrap();
            let tol = if m < 3.0 { 1e-6 } else { 1e-9 };
            assert_abs_diff_eq!(p.power_expectation(0.0, 2.0).unwrap(), 1.0, epsilon = tol);
        }
        let p = SpivParams::new(5.0, 0.0).unwrap();
        assert_abs_diff_eq!(p.power_expectation(0.5, 2.0).unwrap(), 1.25, epsilon = 1e-9);

        let p = SpivParams::new(5.6275, 0.4748).unwrap();
        let v = p.power_expectation(0.2043, 1.1946).unwrap();
        assert_abs_diff_eq!(0.0586 * v + 0.9493, 0.9940, epsilon = 0.002);
        // independent high-precision quadrature gives 0.765165846457836
        assert_abs_diff_eq!(v, 0.765_165_846_457_836, epsilon = 1e-9);
    }

    #[test]
    fn power_expectation_divergence() {
        let p = SpivParams::new(3.0, 0.5).unwrap();
        let e = p.power_expectation(0.1, 3.0).unwrap_err();
        assert!(matches!(e, Error::Divergence(_)), "{e}");
        assert!(p.power_expectation(1.0, 1.0).is_err());
        assert!(p.power_expectation(0.0, 0.0).is_err());
    }

    #[test]
    fn student_t_reduction() {
        for m in [3.0, 5.0, 10.0] {
            let p = SpivParams::new(m, 0.0).unwrap();
            let (t, s) = unit_t(m);
            for z in [-4.0, -1.7, -0.2, 0.0, 0.9, 2.6, 6.0] {
                assert_abs_diff_eq!(p.pdf(z), s * t.pdf(z * s), epsilon = 1e-12);
                assert_abs_diff_eq!(p.cdf(z).unwrap(), t.cdf(z * s), epsilon = 1e-10);
            }
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]

        #[test]
        fn reflection_identity(m in 2.2f64..30.0, nu in -5.0f64..5.0, z in -8.0f64..8.0) {
            let p = SpivParams::new(m, nu).unwrap();
            let lhs = p.cdf(z).unwrap();
            let rhs = 1.0 - p.reflected().cdf(-z).unwrap();
            proptest::prop_assert!((lhs - rhs).abs() < 1e-10, "{} vs {}", lhs, rhs);
        }

        #[test]
        fn cdf_monotone(m in 2.2f64..30.0, nu in -5.0f64..5.0, z in -6.0f64..6.0, dz in 0.001f64..1.0) {
            let p = SpivParams::new(m, nu).unwrap();
            proptest::prop_assert!(p.cdf(z).unwrap() <= p.cdf(z + dz).unwrap() + 1e-14);
        }

        #[test]
        fn quantile_monotone(m in 2.2f64..30.0, nu in -5.0f64..5.0, a in 0.001f64..0.99, da in 0.0005f64..0.009) {
            let p = SpivParams::new(m, nu).unwrap();
            proptest::prop_assert!(p.quantile(a).unwrap() < p.quantile(a + da).unwrap());
        }
    }
}
