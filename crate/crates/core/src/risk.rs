//! Value-at-Risk series and their backtests: Kupiec proportion of failures,
//! Christoffersen independence and conditional coverage, the dynamic quantile
//! test, Lopez and Sarma losses, and tail conditional expectations.
//!
//! A level `a < 0.5` describes a long position (violation when the return
//! falls below the VaR); `a ≥ 0.5` a short position (violation above). The
//! nominal violation probability is `a` for long and `1 - a` for short.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::condition_number;
use crate::spiv::SpivParams;
use crate::stats::{chi2_sf, mean, xlogy};

/// Default backtest levels: short side then long side.
pub const DEFAULT_LEVELS: [f64; 12] = [
    0.95, 0.975, 0.99, 0.995, 0.9975, 0.999, 0.05, 0.025, 0.01, 0.005, 0.0025, 0.001,
];

/// Default number of lags in the dynamic quantile regression.
pub const DEFAULT_DQ_LAGS: usize = 5;

/// Regressor matrices with a larger condition number count as singular.
const DQ_MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Long,
    Short,
}

impl Side {
    pub fn from_level(a: f64) -> Self {
        if a < 0.5 {
            Side::Long
        } else {
            Side::Short
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarSeries {
    pub level: f64,
    pub side: Side,
    pub values: Vec<f64>,
}

impl VarSeries {
    /// Probability of a violation under a correct model.
    pub fn violation_prob(&self) -> f64 {
        match self.side {
            Side::Long => self.level,
            Side::Short => 1.0 - self.level,
        }
    }

    #[inline]
    fn violated(&self, r: f64, var: f64) -> bool {
        match self.side {
            Side::Long => r < var,
            Side::Short => r > var,
        }
    }
}

fn check_level(a: f64) -> Result<()> {
    if a > 0.0 && a < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("VaR level must lie in (0, 1), got {a}")))
    }
}

fn check_lengths(returns: &[f64], var: &VarSeries) -> Result<()> {
    if returns.len() != var.values.len() {
        return Err(Error::domain(format!(
            "returns and VaR lengths differ ({} vs {})",
            returns.len(),
            var.values.len()
        )));
    }
    Ok(())
}

/// `VaR_t = μ + P⁻¹(a) σ_t`.
pub fn var_series(mu: f64, sigma: &[f64], p: &SpivParams, a: f64, side: Side) -> Result<VarSeries> {
    check_level(a)?;
    if let Some(t) = sigma.iter().position(|s| !(*s > 0.0)) {
        return Err(Error::domain(format!("sigma[{t}] = {} is not positive", sigma[t])));
    }
    let q = p.quantile(a)?;
    Ok(VarSeries {
        level: a,
        side,
        values: sigma.iter().map(|s| mu + q * s).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HitSequence {
    pub hits: Vec<bool>,
    pub n: usize,
    pub x: usize,
}

impl HitSequence {
    pub fn from_hits(hits: Vec<bool>) -> Self {
        let x = hits.iter().filter(|&&h| h).count();
        Self { n: hits.len(), x, hits }
    }
}

pub fn hit_sequence(returns: &[f64], var: &VarSeries) -> Result<HitSequence> {
    check_lengths(returns, var)?;
    Ok(HitSequence::from_hits(
        returns.iter().zip(&var.values).map(|(&r, &v)| var.violated(r, v)).collect(),
    ))
}

/// Likelihood-ratio or Wald statistic with its p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrTest {
    pub stat: f64,
    pub p_value: f64,
    /// The statistic is undefined here; `p_value` is set to 1.
    pub degenerate: bool,
}

/// Kupiec proportion-of-failures test against violation probability `p`.
pub fn kupiec_pof(h: &HitSequence, p: f64) -> Result<LrTest> {
    check_level(p)?;
    if h.n == 0 {
        return Err(Error::domain("Kupiec test needs observations"));
    }
    let n = h.n as f64;
    let x = h.x as f64;
    let phat = x / n;
    let ll0 = xlogy(n - x, 1.0 - p) + xlogy(x, p);
    let ll1 = xlogy(n - x, 1.0 - phat) + xlogy(x, phat);
    let stat = (-2.0 * (ll0 - ll1)).max(0.0);
    Ok(LrTest {
        stat,
        p_value: chi2_sf(stat, 1.0),
        degenerate: false,
    })
}

/// First-order transition counts `[n00, n01, n10, n11]`.
pub fn transition_counts(h: &HitSequence) -> [usize; 4] {
    let mut c = [0usize; 4];
    for w in h.hits.windows(2) {
        c[2 * usize::from(w[0]) + usize::from(w[1])] += 1;
    }
    c
}

/// Christoffersen first-order Markov independence test.
pub fn christoffersen_independence(h: &HitSequence) -> Result<LrTest> {
    if h.n < 2 {
        return Err(Error::domain("independence test needs at least two observations"));
    }
    if h.x == 0 {
        return Ok(LrTest {
            stat: 0.0,
            p_value: 1.0,
            degenerate: true,
        });
    }
    let [n00, n01, n10, n11] = transition_counts(h).map(|v| v as f64);
    let pi01 = if n00 + n01 > 0.0 { n01 / (n00 + n01) } else { 0.0 };
    let pi11 = if n10 + n11 > 0.0 { n11 / (n10 + n11) } else { 0.0 };
    let pi = (n01 + n11) / (n00 + n01 + n10 + n11);
    let ll0 = xlogy(n00 + n10, 1.0 - pi) + xlogy(n01 + n11, pi);
    let ll1 = xlogy(n00, 1.0 - pi01) + xlogy(n01, pi01) + xlogy(n10, 1.0 - pi11) + xlogy(n11, pi11);
    let stat = (-2.0 * (ll0 - ll1)).max(0.0);
    Ok(LrTest {
        stat,
        p_value: chi2_sf(stat, 1.0),
        degenerate: false,
    })
}

/// Christoffersen conditional coverage: Kupiec plus independence, χ²(2).
pub fn conditional_coverage(h: &HitSequence, p: f64) -> Result<LrTest> {
    let uc = kupiec_pof(h, p)?;
    let ind = christoffersen_independence(h)?;
    let stat = uc.stat + ind.stat;
    Ok(LrTest {
        stat,
        p_value: chi2_sf(stat, 2.0),
        degenerate: ind.degenerate,
    })
}

/// Dynamic quantile test.
///
/// Regresses `Hit_t - p` on a constant, `Hit_{t-j} - p` and `VaR_{t-j}` for
/// `j = 1..=k` (so `2k + 1` regressors); the Wald statistic
/// `β̂'X'Xβ̂ / (p(1-p))` is referred to χ²(2k + 1). A singular design (for
/// example no violations, or a constant VaR) gives `p = 1` with the
/// degeneracy flag set.
pub fn dq_test(h: &HitSequence, var: &VarSeries, k: usize) -> Result<LrTest> {
    if h.n != var.values.len() {
        return Err(Error::domain("hit and VaR lengths differ"));
    }
    if k == 0 {
        return Err(Error::domain("DQ test needs at least one lag"));
    }
    let dof = 2 * k + 1;
    if h.n <= dof + 10 {
        return Err(Error::domain(format!(
            "DQ test with {k} lags needs more than {} observations, got {}",
            dof + 10,
            h.n
        )));
    }
    let p = var.violation_prob();
    let demeaned: Vec<f64> = h.hits.iter().map(|&b| f64::from(u8::from(b)) - p).collect();
    let rows = h.n - k;
    let x = DMatrix::from_fn(rows, dof, |i, j| {
        let t = i + k;
        match j {
            0 => 1.0,
            j if j <= k => demeaned[t - j],
            j => var.values[t - (j - k)],
        }
    });
    let y = DVector::from_column_slice(&demeaned[k..]);
    let xtx = x.transpose() * &x;
    let degenerate = || {
        log::warn!("DQ regressors are singular at level {}; reporting p = 1", var.level);
        LrTest {
            stat: 0.0,
            p_value: 1.0,
            degenerate: true,
        }
    };
    if !(condition_number(&xtx) < DQ_MAX_CONDITION) {
        return Ok(degenerate());
    }
    let Some(chol) = xtx.clone().cholesky() else {
        return Ok(degenerate());
    };
    let beta = chol.solve(&(x.transpose() * &y));
    let stat = (beta.transpose() * &xtx * &beta)[(0, 0)] / (p * (1.0 - p));
    Ok(LrTest {
        stat,
        p_value: chi2_sf(stat, dof as f64),
        degenerate: false,
    })
}

/// Lopez loss `Σ [1 + (r_t - VaR_t)²]` over violations.
pub fn lopez_loss(returns: &[f64], var: &VarSeries) -> Result<f64> {
    check_lengths(returns, var)?;
    Ok(returns
        .iter()
        .zip(&var.values)
        .filter(|(&r, &v)| var.violated(r, v))
        .map(|(r, v)| 1.0 + (r - v).powi(2))
        .sum())
}

/// Sarma regulatory and firm losses.
///
/// Regulatory: `Σ (r_t - VaR_t)²` over violations. Firm: the same on
/// violation days plus the opportunity cost of the capital held on the
/// others, `c·|VaR_t|` (that is `-c·VaR_t` for long positions).
pub fn sarma_losses(returns: &[f64], var: &VarSeries, opportunity_cost: f64) -> Result<(f64, f64)> {
    check_lengths(returns, var)?;
    if !(opportunity_cost >= 0.0) {
        return Err(Error::domain(format!(
            "opportunity cost must be nonnegative, got {opportunity_cost}"
        )));
    }
    let sign = match var.side {
        Side::Long => -1.0,
        Side::Short => 1.0,
    };
    let (mut regulatory, mut firm) = (0.0, 0.0);
    for (&r, &v) in returns.iter().zip(&var.values) {
        if var.violated(r, v) {
            let d = (r - v).powi(2);
            regulatory += d;
            firm += d;
        } else {
            firm += sign * opportunity_cost * v;
        }
    }
    Ok((regulatory, firm))
}

/// How the TCE-to-VaR multiple is aggregated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tce2Convention {
    /// Mean over violations of `r_t / VaR_t`.
    #[default]
    MeanOfRatios,
    /// `TCE1 / mean VaR over violations`.
    RatioOfMeans,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub level: f64,
    pub side: Side,
    pub violations: usize,
    /// Mean conditional VaR over the whole sample.
    pub var_mean: f64,
    /// Empirical `a`-quantile of the returns.
    pub var_empirical: f64,
    /// Mean VaR over the violation days.
    #[serde(with = "crate::data_io::nan_as_null")]
    pub var_ref: f64,
    /// Mean return over the violation days.
    #[serde(with = "crate::data_io::nan_as_null")]
    pub tce1: f64,
    #[serde(with = "crate::data_io::nan_as_null")]
    pub tce2: f64,
    pub tce2_convention: Tce2Convention,
    /// Empirical violation frequency over the nominal probability.
    pub lambda: f64,
    /// `TCE1 + (max(λ, 1) - 1)(TCE1 - VaR_ref)`.
    #[serde(with = "crate::data_io::nan_as_null")]
    pub es: f64,
    /// No violations: the tail measures are undefined (NaN).
    pub undefined: bool,
}

/// Empirical quantile with linear interpolation between order statistics.
fn empirical_quantile(xs: &[f64], a: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = a * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

/// Expected shortfall correction of a tail conditional expectation.
pub fn expected_shortfall(tce: f64, var_ref: f64, lambda: f64) -> f64 {
    tce + (lambda.max(1.0) - 1.0) * (tce - var_ref)
}

pub fn tail_measures(returns: &[f64], var: &VarSeries, convention: Tce2Convention) -> Result<TailRow> {
    check_lengths(returns, var)?;
    if returns.is_empty() {
        return Err(Error::domain("tail measures need observations"));
    }
    let (mut sum_r, mut sum_v, mut sum_ratio, mut x) = (0.0, 0.0, 0.0, 0usize);
    for (&r, &v) in returns.iter().zip(&var.values) {
        if var.violated(r, v) {
            sum_r += r;
            sum_v += v;
            sum_ratio += r / v;
            x += 1;
        }
    }
    let n = returns.len() as f64;
    let var_mean = mean(&var.values);
    let var_empirical = empirical_quantile(returns, var.level);
    let lambda = x as f64 / n / var.violation_prob();
    if x == 0 {
        return Ok(TailRow {
            level: var.level,
            side: var.side,
            violations: 0,
            var_mean,
            var_empirical,
            var_ref: f64::NAN,
            tce1: f64::NAN,
            tce2: f64::NAN,
            tce2_convention: convention,
            lambda,
            es: f64::NAN,
            undefined: true,
        });
    }
    let xf = x as f64;
    let tce1 = sum_r / xf;
    let var_ref = sum_v / xf;
    let tce2 = match convention {
        Tce2Convention::MeanOfRatios => sum_ratio / xf,
        Tce2Convention::RatioOfMeans => tce1 / var_ref,
    };
    Ok(TailRow {
        level: var.level,
        side: var.side,
        violations: x,
        var_mean,
        var_empirical,
        var_ref,
        tce1,
        tce2,
        tce2_convention: convention,
        lambda,
        es: expected_shortfall(tce1, var_ref, lambda),
        undefined: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestRow {
    pub level: f64,
    pub side: Side,
    pub n: usize,
    pub violations: usize,
    /// Failure ratio `x/n` for long positions, success ratio `1 - x/n` for
    /// short ones.
    pub ratio: f64,
    pub kupiec: LrTest,
    pub independence: LrTest,
    pub conditional: LrTest,
    pub dq: LrTest,
    pub lopez: f64,
    pub sarma_regulatory: f64,
    pub sarma_firm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub backtest: BacktestRow,
    pub tail: TailRow,
    /// `P⁻¹(a)` of the standardized innovation.
    pub standardized_quantile: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BacktestOptions {
    pub dq_lags: usize,
    pub opportunity_cost: f64,
    pub tce2: Tce2Convention,
}

impl Default for BacktestOptions {
    fn default() -> Self {
        Self {
            dq_lags: DEFAULT_DQ_LAGS,
            opportunity_cost: 0.01,
            tce2: Tce2Convention::MeanOfRatios,
        }
    }
}

/// Full battery at one level.
pub fn backtest_level(
    returns: &[f64],
    mu: f64,
    sigma: &[f64],
    p: &SpivParams,
    level: f64,
    opts: &BacktestOptions,
) -> Result<LevelReport> {
    let side = Side::from_level(level);
    let var = var_series(mu, sigma, p, level, side)?;
    let hits = hit_sequence(returns, &var)?;
    let prob = var.violation_prob();
    let (sarma_regulatory, sarma_firm) = sarma_losses(returns, &var, opts.opportunity_cost)?;
    let ratio = hits.x as f64 / hits.n as f64;
    let backtest = BacktestRow {
        level,
        side,
        n: hits.n,
        violations: hits.x,
        ratio: match side {
            Side::Long => ratio,
            Side::Short => 1.0 - ratio,
        },
        kupiec: kupiec_pof(&hits, prob)?,
        independence: christoffersen_independence(&hits)?,
        conditional: conditional_coverage(&hits, prob)?,
        dq: dq_test(&hits, &var, opts.dq_lags)?,
        lopez: lopez_loss(returns, &var)?,
        sarma_regulatory,
        sarma_firm,
    };
    Ok(LevelReport {
        backtest,
        tail: tail_measures(returns, &var, opts.tce2)?,
        standardized_quantile: p.quantile(level)?,
    })
}

/// All levels, evaluated concurrently; output follows the order of `levels`.
pub fn backtest(
    returns: &[f64],
    mu: f64,
    sigma: &[f64],
    p: &SpivParams,
    levels: &[f64],
    opts: &BacktestOptions,
) -> Result<Vec<LevelReport>> {
    levels
        .par_iter()
        .map(|&a| backtest_level(returns, mu, sigma, p, a, opts))
        .collect()
}
