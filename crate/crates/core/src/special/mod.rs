//! Special functions: squared magnitude of complex gamma ratios, the Gauss
//! hypergeometric function with complex parameters, and quadrature.

mod hyp2f1;
#[allow(clippy::excessive_precision)]
pub mod quad;

use std::f64::consts::PI;

use num_complex::Complex64;

pub use hyp2f1::{hyp2f1, hyp2f1_series, Hyp2f1Method, SERIES_RADIUS};
pub use quad::{adaptive_quad, integrate, QuadConfig, QuadResult};

use crate::error::{Error, Result};

/// Complex number used throughout the hypergeometric machinery.
pub type ComplexValue = Complex64;

/// `ln |Γ(x+iy)/Γ(x)|²` for `x > 0`.
///
/// The argument is first shifted upward with `Γ(z+1) = zΓ(z)` until
/// `x ≥ max(2y², 10)`, collecting the factors `1 + (y/x)²` on the way; at the
/// shifted point the ratio equals `1 / ₂F₁(-iy, iy; x; 1)`, whose series
/// `Σ_k Π_{j<k} (y² + j²) / ((x + j)(j + 1))` converges fast once `x` is large.
/// Walking back down the collected factors gives the value at the original `x`.
pub fn ln_gamma_ratio_sq(x: f64, y: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!(
            "gamma ratio needs x > 0, got x = {x}"
        )));
    }
    if !y.is_finite() {
        return Err(Error::domain(format!("gamma ratio needs finite y, got {y}")));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    let y2 = y * y;
    let x_start = (2.0 * y2).max(10.0);
    let mut x = x;
    let mut ln_factors = 0.0;
    while x < x_start {
        let t = y / x;
        ln_factors += (t * t).ln_1p();
        x += 1.0;
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut f = 0.0;
    while term > sum * f64::EPSILON * 0.25 {
        term *= (y2 + f * f) / (x * (f + 1.0));
        x += 1.0;
        f += 1.0;
        sum += term;
    }
    Ok(-(ln_factors + sum.ln()))
}

/// `|Γ(x+iy)/Γ(x)|²` for `x > 0`; in `(0, 1]`, equal to 1 only at `y = 0`.
pub fn gamma_ratio_sq(x: f64, y: f64) -> Result<f64> {
    ln_gamma_ratio_sq(x, y).map(f64::exp)
}

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Principal-branch `ln Γ(z)` for complex `z` (Lanczos, g = 7).
pub fn ln_gamma_complex(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        // Reflection: Γ(z)Γ(1-z) = π / sin(πz)
        let s = (Complex64::new(PI, 0.0) * z).sin();
        return Complex64::new(PI.ln(), 0.0) - s.ln() - ln_gamma_complex(Complex64::new(1.0, 0.0) - z);
    }
    let z = z - 1.0;
    let mut acc = Complex64::new(LANCZOS[0], 0.0);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    Complex64::new(0.5 * (2.0 * PI).ln(), 0.0) + (z + 0.5) * t.ln() - t + acc.ln()
}
