//! APARCH(1,1) with standardized Pearson IV innovations.
//!
//! ```text
//! r_t = μ + ε_t,   ε_t = σ_t z_t,   z_t ~ SPIV(m, ν)
//! σ_t^δ = ω + α (|ε_{t-1}| - γ ε_{t-1})^δ + β σ_{t-1}^δ
//! ```
//!
//! The recursion starts from sample averages: the pre-sample `σ^δ` is
//! `(mean ε²)^{δ/2}` and the pre-sample `(|ε| - γε)^δ` is its sample mean,
//! both computed from residuals at the current `μ`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{bfgs, nelder_mead, sandwich_se, BfgsOptions, NelderMeadOptions};
use crate::spiv::SpivParams;
use crate::stats::{mean, normal_two_sided_p};

/// Parameter names in vector order.
pub const PARAM_NAMES: [&str; 8] = ["mu", "omega", "alpha", "beta", "gamma", "delta", "nu", "m"];

/// Persistence at or above this is rejected during estimation.
pub const PERSISTENCE_BARRIER: f64 = 1.0 - 1e-6;

/// Smallest sample the estimator accepts.
pub const MIN_FIT_OBS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AparchParams {
    pub mu: f64,
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub spiv: SpivParams,
}

impl AparchParams {
    /// The vector `[μ, ω, α, β, γ, δ, ν, m]`.
    pub fn from_vector(v: &[f64]) -> Result<Self> {
        if v.len() != 8 {
            return Err(Error::domain(format!("APARCH needs 8 parameters, got {}", v.len())));
        }
        let p = Self {
            mu: v[0],
            omega: v[1],
            alpha: v[2],
            beta: v[3],
            gamma: v[4],
            delta: v[5],
            spiv: SpivParams::new(v[7], v[6])?,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn to_vector(&self) -> [f64; 8] {
        [
            self.mu,
            self.omega,
            self.alpha,
            self.beta,
            self.gamma,
            self.delta,
            self.spiv.nu(),
            self.spiv.m(),
        ]
    }

    /// Box constraints: `ω > 0`, `α ≥ 0`, `β ≥ 0`, `δ > 0`, `|γ| < 1`.
    ///
    /// `α = 0` is accepted so the constant-volatility special case can be
    /// expressed; estimation keeps `α` strictly positive.
    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.mu, self.omega, self.alpha, self.beta, self.gamma, self.delta]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::domain("APARCH parameters must be finite"));
        }
        let mut bad = Vec::new();
        if !(self.omega > 0.0) {
            bad.push(format!("omega = {} must be > 0", self.omega));
        }
        if !(self.alpha >= 0.0) {
            bad.push(format!("alpha = {} must be >= 0", self.alpha));
        }
        if !(self.beta >= 0.0) {
            bad.push(format!("beta = {} must be >= 0", self.beta));
        }
        if !(self.delta > 0.0) {
            bad.push(format!("delta = {} must be > 0", self.delta));
        }
        if !(self.gamma.abs() < 1.0) {
            bad.push(format!("gamma = {} must lie in (-1, 1)", self.gamma));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::domain(bad.join("; ")))
        }
    }

    /// `α E(|z| - γz)^δ + β`.
    pub fn persistence(&self) -> Result<f64> {
        if self.alpha == 0.0 {
            return Ok(self.beta);
        }
        Ok(self.alpha * self.spiv.power_expectation(self.gamma, self.delta)? + self.beta)
    }

    #[inline]
    fn news(&self, eps: f64) -> f64 {
        (eps.abs() - self.gamma * eps).powf(self.delta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterState {
    /// `σ_t^δ`.
    pub sigma_delta: Vec<f64>,
    /// `ε_t = r_t - μ`.
    pub residuals: Vec<f64>,
    /// `z_t = ε_t / σ_t`.
    pub std_residuals: Vec<f64>,
}

impl FilterState {
    /// `σ_t`.
    pub fn sigma(&self, delta: f64) -> Vec<f64> {
        self.sigma_delta.iter().map(|s| s.powf(1.0 / delta)).collect()
    }

    /// `h_t = σ_t²`.
    pub fn variance(&self, delta: f64) -> Vec<f64> {
        self.sigma_delta.iter().map(|s| s.powf(2.0 / delta)).collect()
    }
}

/// Runs the recursion, handing `(t, ε_t, σ_t^δ)` to `visit`.
fn recursion<F: FnMut(usize, f64, f64)>(p: &AparchParams, returns: &[f64], mut visit: F) -> Result<()> {
    if returns.is_empty() {
        return Err(Error::domain("APARCH filter needs at least one return"));
    }
    let n = returns.len() as f64;
    let mut sq = 0.0;
    let mut news = 0.0;
    for &r in returns {
        let e = r - p.mu;
        sq += e * e;
        news += p.news(e);
    }
    let sigma_pre = (sq / n).powf(0.5 * p.delta);
    let news_pre = news / n;
    let mut sd = p.omega + p.alpha * news_pre + p.beta * sigma_pre;
    for (t, &r) in returns.iter().enumerate() {
        if !(sd > 0.0 && sd.is_finite()) {
            return Err(Error::NumericFault(format!(
                "sigma^delta = {sd} at t = {t} is not positive and finite"
            )));
        }
        let e = r - p.mu;
        visit(t, e, sd);
        sd = p.omega + p.alpha * p.news(e) + p.beta * sd;
    }
    Ok(())
}

pub fn aparch_filter(params: &AparchParams, returns: &[f64]) -> Result<FilterState> {
    params.validate()?;
    let n = returns.len();
    let mut state = FilterState {
        sigma_delta: Vec::with_capacity(n),
        residuals: Vec::with_capacity(n),
        std_residuals: Vec::with_capacity(n),
    };
    recursion(params, returns, |_, e, sd| {
        state.sigma_delta.push(sd);
        state.residuals.push(e);
        state.std_residuals.push(e / sd.powf(1.0 / params.delta));
    })?;
    Ok(state)
}

/// Per-observation log-likelihood terms `ln p(z_t) - ½ ln h_t`.
pub fn aparch_loglik_terms(params: &AparchParams, returns: &[f64]) -> Result<Vec<f64>> {
    params.validate()?;
    let mut out = Vec::with_capacity(returns.len());
    let inv_delta = 1.0 / params.delta;
    recursion(params, returns, |_, e, sd| {
        let ln_sigma = sd.ln() * inv_delta;
        out.push(params.spiv.logpdf(e * (-ln_sigma).exp()) - ln_sigma);
    })?;
    Ok(out)
}

/// `Σ_t [ln p(z_t) - ½ ln h_t]`, or `-∞` when the filter cannot run.
pub fn aparch_loglik(params: &AparchParams, returns: &[f64]) -> f64 {
    if params.validate().is_err() {
        return f64::NEG_INFINITY;
    }
    let inv_delta = 1.0 / params.delta;
    let mut sum = 0.0;
    let ok = recursion(params, returns, |_, e, sd| {
        let ln_sigma = sd.ln() * inv_delta;
        sum += params.spiv.logpdf(e * (-ln_sigma).exp()) - ln_sigma;
    });
    if ok.is_err() || !sum.is_finite() {
        f64::NEG_INFINITY
    } else {
        sum
    }
}

/// Log-likelihood at a raw `[μ, ω, α, β, γ, δ, ν, m]` vector; `-∞` when the
/// vector violates the constraints.
pub fn aparch_loglik_at(v: &[f64], returns: &[f64]) -> f64 {
    match AparchParams::from_vector(v) {
        Ok(p) => aparch_loglik(&p, returns),
        Err(_) => f64::NEG_INFINITY,
    }
}

/// Robust (QML sandwich) standard errors in `[μ, ω, α, β, γ, δ, ν, m]` order.
pub fn aparch_robust_se(params: &AparchParams, returns: &[f64]) -> Result<Vec<f64>> {
    let n = returns.len() as f64;
    let mean_ll = |v: &[f64]| aparch_loglik_at(v, returns) / n;
    let terms = |v: &[f64]| match AparchParams::from_vector(v).and_then(|p| aparch_loglik_terms(&p, returns)) {
        Ok(t) => t,
        Err(_) => vec![f64::NAN; returns.len()],
    };
    sandwich_se(mean_ll, terms, &params.to_vector())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub multi_start: usize,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iter: 5000,
            tol: 1e-8,
            multi_start: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub params: AparchParams,
    pub loglik: f64,
    /// NaN entries when the sandwich could not be formed (see `se_error`).
    pub robust_se: Vec<f64>,
    pub t_stats: Vec<f64>,
    /// Two-sided normal p-values of the t statistics.
    pub p_values: Vec<f64>,
    pub persistence: f64,
    pub state: FilterState,
    pub converged: bool,
    pub iterations: usize,
    /// Incumbent log-likelihood after every optimizer iteration.
    pub history: Vec<f64>,
    pub se_error: Option<String>,
}

/// Unconstrained coordinates: μ, ln ω, ln α, logit β, atanh γ, ln δ, ν, ln(m - 2).
fn to_free(v: &[f64; 8]) -> [f64; 8] {
    [
        v[0],
        v[1].ln(),
        v[2].ln(),
        (v[3] / (1.0 - v[3])).ln(),
        v[4].atanh(),
        v[5].ln(),
        v[6],
        (v[7] - 2.0).ln(),
    ]
}

fn from_free(u: &[f64]) -> [f64; 8] {
    [
        u[0],
        u[1].exp(),
        u[2].exp(),
        1.0 / (1.0 + (-u[3]).exp()),
        u[4].tanh(),
        u[5].exp(),
        u[6],
        2.0 + u[7].exp(),
    ]
}

/// Negative mean log-likelihood in free coordinates, `+∞` when rejected.
fn objective(u: &[f64], returns: &[f64]) -> f64 {
    let v = from_free(u);
    let Ok(p) = AparchParams::from_vector(&v) else {
        return f64::INFINITY;
    };
    match p.persistence() {
        Ok(pers) if pers < PERSISTENCE_BARRIER => {}
        _ => return f64::INFINITY,
    }
    let ll = aparch_loglik(&p, returns);
    if ll.is_finite() {
        -ll / returns.len() as f64
    } else {
        f64::INFINITY
    }
}

/// The fixed starting point.
pub fn starting_point(returns: &[f64]) -> [f64; 8] {
    let mu = mean(returns);
    let var = returns.iter().map(|r| (r - mu).powi(2)).sum::<f64>() / returns.len() as f64;
    [mu, 0.05 * var, 0.05, 0.90, 0.0, 1.5, 0.0, 6.0]
}

struct Run {
    u: Vec<f64>,
    f: f64,
    converged: bool,
    iterations: usize,
    history: Vec<f64>,
}

/// Alternating simplex and quasi-Newton stages from one start.
fn optimize(returns: &[f64], start: &[f64], opts: &FitOptions) -> Run {
    let f = |u: &[f64]| objective(u, returns);
    let mut u = start.to_vec();
    let mut fu = f(&u);
    let mut iterations = 0;
    let mut history = Vec::new();
    let mut quiet_stages = 0;
    let mut stage = 0usize;
    let converged = loop {
        if iterations >= opts.max_iter {
            break false;
        }
        let budget = opts.max_iter - iterations;
        let m = if stage.is_multiple_of(2) {
            let nm = NelderMeadOptions {
                initial_step: if stage == 0 { 0.1 } else { 0.02 },
                max_iter: budget.min(400 * u.len()),
                ftol: 0.1 * opts.tol,
                xtol: 1e-6,
            };
            nelder_mead(f, &u, nm)
        } else {
            let bo = BfgsOptions {
                max_iter: budget.min(500),
                gtol: 1e-7,
                ftol: 1e-3 * opts.tol,
            };
            bfgs(f, &u, bo)
        };
        iterations += m.iterations;
        history.extend(m.history.iter().map(|v| v.min(fu)));
        let improvement = if m.fx < fu { fu - m.fx } else { 0.0 };
        if m.fx < fu {
            u = m.x;
            fu = m.fx;
        }
        stage += 1;
        if improvement < opts.tol && fu.is_finite() {
            quiet_stages += 1;
            if quiet_stages >= 2 {
                break true;
            }
        } else {
            quiet_stages = 0;
        }
    };
    Run {
        u,
        f: fu,
        converged,
        iterations,
        history,
    }
}

/// Maximum-likelihood fit under the stationarity and box constraints.
pub fn aparch_fit(returns: &[f64], opts: &FitOptions) -> Result<FitResult> {
    if returns.len() < MIN_FIT_OBS {
        return Err(Error::domain(format!(
            "APARCH fit needs at least {MIN_FIT_OBS} observations, got {}",
            returns.len()
        )));
    }
    if returns.iter().any(|r| !r.is_finite()) {
        return Err(Error::domain("returns contain non-finite values"));
    }
    let start = starting_point(returns);
    if !(start[1] > 0.0) {
        return Err(Error::domain("returns have zero variance"));
    }
    let base = to_free(&start);
    let starts: Vec<Vec<f64>> = (0..opts.multi_start.max(1))
        .map(|k| {
            if k == 0 {
                return base.to_vec();
            }
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(k as u64));
            base.iter().map(|b| b + 0.5 * (rng.random::<f64>() - 0.5)).collect()
        })
        .collect();
    let runs: Vec<Run> = starts.par_iter().map(|s| optimize(returns, s, opts)).collect();
    let best = runs
        .into_iter()
        .filter(|r| r.f.is_finite())
        .min_by(|a, b| {
            a.f.total_cmp(&b.f).then_with(|| {
                let va = from_free(&a.u);
                let vb = from_free(&b.u);
                va.iter()
                    .zip(&vb)
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
        })
        .ok_or_else(|| Error::NonConvergence("no start reached a feasible point".into()))?;

    let params = AparchParams::from_vector(&from_free(&best.u))?;
    let loglik = aparch_loglik(&params, returns);
    let persistence = params.persistence()?;
    let state = aparch_filter(&params, returns)?;
    let est = params.to_vector();
    let (robust_se, se_error) = match aparch_robust_se(&params, returns) {
        Ok(se) => (se, None),
        Err(e) => {
            log::warn!("robust standard errors unavailable: {e}");
            (vec![f64::NAN; 8], Some(e.to_string()))
        }
    };
    let t_stats: Vec<f64> = est.iter().zip(&robust_se).map(|(e, s)| e / s).collect();
    let p_values = t_stats
        .iter()
        .map(|&t| if t.is_finite() { normal_two_sided_p(t) } else { f64::NAN })
        .collect();
    let n = returns.len() as f64;
    Ok(FitResult {
        params,
        loglik,
        robust_se,
        t_stats,
        p_values,
        persistence,
        state,
        converged: best.converged,
        iterations: best.iterations,
        history: best.history.iter().map(|f| -f * n).collect(),
        se_error,
    })
}

/// `n` returns from the model after discarding `burn_in` leading draws.
pub fn aparch_simulate(params: &AparchParams, n: usize, burn_in: usize, seed: u64) -> Result<Vec<f64>> {
    params.validate()?;
    let persistence = params.persistence()?;
    if !(persistence < 1.0) {
        return Err(Error::domain(format!(
            "simulation needs persistence < 1, got {persistence}"
        )));
    }
    let z = params.spiv.sample(n + burn_in, seed)?;
    let mut sd = params.omega / (1.0 - persistence);
    let mut out = Vec::with_capacity(n);
    for (t, &zt) in z.iter().enumerate() {
        let e = sd.powf(1.0 / params.delta) * zt;
        if t >= burn_in {
            out.push(params.mu + e);
        }
        sd = params.omega + params.alpha * params.news(e) + params.beta * sd;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn reference_params() -> AparchParams {
        AparchParams::from_vector(&[0.0058, 0.0166, 0.0586, 0.9493, 0.2043, 1.1946, 0.4748, 5.6275]).unwrap()
    }

    #[test]
    fn free_coordinates_roundtrip() {
        let v = reference_params().to_vector();
        let back = from_free(&to_free(&v));
        for (a, b) in v.iter().zip(&back) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn constant_volatility_when_alpha_beta_vanish() {
        let mut p = reference_params();
        p.alpha = 0.0;
        p.beta = 0.0;
        let s = aparch_filter(&p, &[1.0, -2.0, 0.5, 3.0]).unwrap();
        assert!(s.sigma_delta.iter().all(|&v| v == p.omega));
        assert_eq!(p.persistence().unwrap(), 0.0);
    }

    #[test]
    fn hand_recursion_on_toy_series() {
        let p = reference_params();
        let r = [1.0, -2.0, 0.5, 3.0, -1.0];
        let s = aparch_filter(&p, &r).unwrap();
        let e: Vec<f64> = r.iter().map(|x| x - 0.0058).collect();
        let k = |x: f64| (x.abs() - 0.2043 * x).powf(1.1946);
        let s0 = (e.iter().map(|x| x * x).sum::<f64>() / 5.0).powf(1.1946 / 2.0);
        let k0 = e.iter().map(|&x| k(x)).sum::<f64>() / 5.0;
        let mut expect = vec![0.0166 + 0.0586 * k0 + 0.9493 * s0];
        for t in 1..5 {
            expect.push(0.0166 + 0.0586 * k(e[t - 1]) + 0.9493 * expect[t - 1]);
        }
        for (a, b) in s.sigma_delta.iter().zip(&expect) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_zero_residual() {
        let mut p = reference_params();
        p.alpha = 0.0;
        p.beta = 0.0;
        p.omega = 1.0;
        p.delta = 2.0;
        let ll = aparch_loglik(&p, &[p.mu]);
        assert_abs_diff_eq!(ll, p.spiv.logpdf(0.0), epsilon = 1e-15);
    }

    #[test]
    fn garch_nesting() {
        let mut p = reference_params();
        p.gamma = 0.0;
        p.delta = 2.0;
        let r: Vec<f64> = (0..300).map(|i| ((i * 7919) % 211) as f64 / 50.0 - 2.1).collect();
        let s = aparch_filter(&p, &r).unwrap();
        let e: Vec<f64> = r.iter().map(|x| x - p.mu).collect();
        let mut h = p.omega + p.alpha * e.iter().map(|x| x * x).sum::<f64>() / 300.0
            + p.beta * e.iter().map(|x| x * x).sum::<f64>() / 300.0;
        for (sd, et) in s.sigma_delta.iter().zip(&e) {
            assert!((sd - h).abs() <= 1e-12 * h);
            h = p.omega + p.alpha * et * et + p.beta * h;
        }
        assert_abs_diff_eq!(p.persistence().unwrap(), p.alpha + p.beta, epsilon = 1e-9);
    }

    #[test]
    fn persistence_at_reference_values() {
        assert_abs_diff_eq!(reference_params().persistence().unwrap(), 0.9940, epsilon = 0.002);
    }

    #[test]
    fn loglik_matches_naive_sum() {
        let p = reference_params();
        let r = aparch_simulate(&p, 500, 100, 3).unwrap();
        let s = aparch_filter(&p, &r).unwrap();
        let naive: f64 = s
            .std_residuals
            .iter()
            .zip(&s.sigma_delta)
            .map(|(z, sd)| p.spiv.pdf(*z).ln() - 0.5 * sd.powf(2.0 / p.delta).ln())
            .sum();
        assert_abs_diff_eq!(aparch_loglik(&p, &r), naive, epsilon = 1e-9);
        let terms: f64 = aparch_loglik_terms(&p, &r).unwrap().iter().sum();
        assert_abs_diff_eq!(terms, naive, epsilon = 1e-9);
    }

    #[test]
    fn invalid_vector_gives_negative_infinity() {
        let mut v = reference_params().to_vector();
        v[4] = 1.5;
        assert_eq!(aparch_loglik_at(&v, &[0.1, 0.2]), f64::NEG_INFINITY);
    }

    #[test]
    fn gradient_agrees_across_step_sizes() {
        let p = reference_params();
        let r = aparch_simulate(&p, 2000, 200, 5).unwrap();
        let v = p.to_vector();
        let f = |x: &[f64]| aparch_loglik_at(x, &r);
        let grad = |scale: f64| -> Vec<f64> {
            (0..8)
                .map(|i| {
                    let h = scale * v[i].abs().max(1.0);
                    let mut a = v;
                    let mut b = v;
                    a[i] += h;
                    b[i] -= h;
                    (f(&a) - f(&b)) / (2.0 * h)
                })
                .collect()
        };
        let g1 = grad(1e-5);
        let g2 = grad(4e-6);
        for (a, b) in g1.iter().zip(&g2) {
            assert!((a - b).abs() <= 1e-4 * a.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn simulation_is_deterministic_and_constant_volatility_reduces() {
        let p = reference_params();
        assert_eq!(aparch_simulate(&p, 200, 50, 1).unwrap(), aparch_simulate(&p, 200, 50, 1).unwrap());
        let mut q = p;
        q.alpha = 0.0;
        q.beta = 0.0;
        let r = aparch_simulate(&q, 100, 0, 4).unwrap();
        let z = q.spiv.sample(100, 4).unwrap();
        for (a, b) in r.iter().zip(&z) {
            assert_abs_diff_eq!(*a, q.mu + q.omega.powf(1.0 / q.delta) * b, epsilon = 1e-12);
        }
    }

    #[test]
    fn rejects_nonstationary_simulation() {
        let mut p = reference_params();
        p.beta = 0.99;
        assert!(aparch_simulate(&p, 10, 0, 1).is_err());
    }

    #[test]
    fn fit_rejects_degenerate_input() {
        assert!(matches!(aparch_fit(&[1.0; 50], &FitOptions::default()), Err(Error::Domain(_))));
        assert!(matches!(aparch_fit(&[1.0; 500], &FitOptions::default()), Err(Error::Domain(_))));
    }

    #[test]
    fn fit_is_deterministic_and_monotone() {
        let p = reference_params();
        let r = aparch_simulate(&p, 1500, 300, 11).unwrap();
        let opts = FitOptions::default();
        let a = aparch_fit(&r, &opts).unwrap();
        let b = aparch_fit(&r, &opts).unwrap();
        assert_eq!(a.params.to_vector(), b.params.to_vector());
        assert_eq!(a.loglik.to_bits(), b.loglik.to_bits());
        assert!(a.history.windows(2).all(|w| w[1] >= w[0]));
        assert!(a.loglik >= aparch_loglik(&p, &r) - 1e-6);
        assert!(a.persistence < 1.0);
    }
}
