use num_complex::Complex64;

use super::ln_gamma_complex;
use super::quad::{integrate, QuadConfig};
use crate::error::{Error, Result};

/// `|w|` up to which the power series is used.
pub const SERIES_RADIUS: f64 = 0.9;

const SERIES_MAX_TERMS: usize = 200_000;
const EULER_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hyp2f1Method {
    Series,
    Euler,
}

fn is_nonpositive_integer(c: Complex64) -> bool {
    c.im == 0.0 && c.re <= 0.0 && c.re == c.re.round()
}

/// Gauss power series `Σ (a)_k (b)_k / ((c)_k k!) w^k`, valid for `|w| < 1`
/// (and on `|w| = 1` when `Re(c - a - b) > 0`, slowly).
pub fn hyp2f1_series(a: Complex64, b: Complex64, c: Complex64, w: Complex64) -> Result<Complex64> {
    if is_nonpositive_integer(c) {
        return Err(Error::domain(format!("2F1: c = {c} is a nonpositive integer")));
    }
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut small_in_row = 0;
    for k in 0..SERIES_MAX_TERMS {
        let kf = k as f64;
        term *= (a + kf) * (b + kf) / ((c + kf) * (kf + 1.0)) * w;
        sum += term;
        if term.re == 0.0 && term.im == 0.0 {
            // terminating series
            return Ok(sum);
        }
        if term.norm() <= f64::EPSILON * 0.5 * sum.norm() {
            small_in_row += 1;
            if small_in_row >= 2 {
                return Ok(sum);
            }
        } else {
            small_in_row = 0;
        }
    }
    Err(Error::NonConvergence(format!(
        "2F1 series at |w| = {} did not converge in {SERIES_MAX_TERMS} terms",
        w.norm()
    )))
}

/// Picks the `(a, b)` ordering for the Euler integral: needs
/// `Re(c) > Re(b) > 0`; prefers orderings with no endpoint singularity.
fn euler_ordering(a: Complex64, b: Complex64, c: Complex64) -> Option<(Complex64, Complex64)> {
    let admissible = |b: Complex64| c.re > b.re && b.re > 0.0;
    let smooth = |b: Complex64| b.re >= 1.0 && (c - b).re >= 1.0;
    let candidates = [(a, b), (b, a)];
    candidates
        .iter()
        .copied()
        .find(|&(_, bb)| admissible(bb) && smooth(bb))
        .or_else(|| candidates.iter().copied().find(|&(_, bb)| admissible(bb)))
}

/// Power that makes `s^{k e - 1}` vanish at `s = 0` after `t = s^k`.
fn flattening_power(e: Complex64) -> f64 {
    if e.re < 1.0 {
        2.0 / e.re
    } else {
        1.0
    }
}

fn hyp2f1_euler(a: Complex64, b: Complex64, c: Complex64, w: Complex64) -> Result<Complex64> {
    let one = Complex64::new(1.0, 0.0);
    let prefactor = (ln_gamma_complex(c) - ln_gamma_complex(b) - ln_gamma_complex(c - b)).exp();
    let p = b - 1.0;
    let q = c - b - 1.0;
    let mut cfg = QuadConfig::absolute(0.0);
    cfg.rel_tol = EULER_TOL;

    // Each half of [0, 1] gets the substitution t = s^j (left) or
    // 1 - t = s^k (right), which tames t^{b-1} and (1-t)^{c-b-1}.
    let j = flattening_power(b);
    let left = |s: f64| {
        if s <= 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let t = s.powf(j);
        let ln = j.ln() + (b * j - 1.0) * s.ln() + q * (-t).ln_1p() - a * (one - w * t).ln();
        ln.exp()
    };
    let k = flattening_power(c - b);
    let right = |s: f64| {
        if s <= 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let r = s.powf(k);
        let ln = k.ln() + ((c - b) * k - 1.0) * s.ln() + p * (-r).ln_1p() - a * (one - w * (1.0 - r)).ln();
        ln.exp()
    };
    let l = integrate(left, 0.0, 0.5f64.powf(1.0 / j), cfg)?;
    let r = integrate(right, 0.0, 0.5f64.powf(1.0 / k), cfg)?;
    Ok(prefactor * (l.value + r.value))
}

/// Which evaluation route `hyp2f1` takes for these arguments, or why none
/// is admissible.
pub fn hyp2f1_method(a: Complex64, b: Complex64, c: Complex64, w: Complex64) -> Result<Hyp2f1Method> {
    if is_nonpositive_integer(c) {
        return Err(Error::domain(format!("2F1: c = {c} is a nonpositive integer")));
    }
    let r = w.norm();
    if r <= SERIES_RADIUS {
        return Ok(Hyp2f1Method::Series);
    }
    let on_cut = w.im == 0.0 && w.re > 1.0;
    let euler = euler_ordering(a, b, c).is_some();
    let endpoint_ok = !(w.im == 0.0 && w.re == 1.0) || (c - a - b).re > 0.0;
    if euler && !on_cut && endpoint_ok {
        return Ok(Hyp2f1Method::Euler);
    }
    if r < 1.0 {
        return Ok(Hyp2f1Method::Series);
    }
    let mut why = Vec::new();
    if !euler {
        why.push(format!(
            "Euler integral needs Re(c) > Re(b) > 0 for b = {a} or {b} (c = {c})"
        ));
    }
    if on_cut {
        why.push(format!("w = {w} lies on the branch cut [1, inf)"));
    }
    if !endpoint_ok {
        why.push("w = 1 needs Re(c - a - b) > 0".to_string());
    }
    why.push(format!("power series needs |w| < 1, got {r}"));
    Err(Error::NonConvergence(format!("2F1 not computable: {}", why.join("; "))))
}

/// Gauss hypergeometric function `₂F₁(a, b; c; w)` with complex parameters.
///
/// The power series is used for `|w| ≤ 0.9`; outside that disc the Euler
/// integral `Γ(c)/(Γ(b)Γ(c-b)) ∫₀¹ t^{b-1}(1-t)^{c-b-1}(1-wt)^{-a} dt`
/// is evaluated by adaptive quadrature when `Re(c) > Re(b) > 0` holds for one
/// ordering of `(a, b)`. If only the series is admissible (`|w| < 1`), it is
/// summed regardless of the radius.
pub fn hyp2f1(a: Complex64, b: Complex64, c: Complex64, w: Complex64) -> Result<Complex64> {
    let zero = |z: Complex64| z.re == 0.0 && z.im == 0.0;
    if zero(w) || zero(a) || zero(b) {
        return Ok(Complex64::new(1.0, 0.0));
    }
    match hyp2f1_method(a, b, c, w)? {
        Hyp2f1Method::Series => hyp2f1_series(a, b, c, w),
        Hyp2f1Method::Euler => {
            let (aa, bb) = euler_ordering(a, b, c).expect("checked by hyp2f1_method");
            hyp2f1_euler(aa, bb, c, w)
        }
    }
}
