//! Stylized-fact statistics, autocorrelation functions and volatility-proxy
//! loss functions.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{chi2_sf, mean, median};

/// A test statistic with its p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestStat {
    pub stat: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub n: usize,
    pub lags: usize,
    pub min: f64,
    pub max: f64,
    pub range: f64,
    pub mean: f64,
    /// Sample standard deviation (divisor `n - 1`).
    pub std_dev: f64,
    pub skewness: f64,
    /// Raw (non-excess) fourth standardized moment.
    pub kurtosis: f64,
    pub jarque_bera: TestStat,
    pub ljung_box_returns: TestStat,
    pub ljung_box_squared: TestStat,
    /// `n·R²` from regressing squared demeaned returns on their own lags.
    pub arch_lm: TestStat,
}

fn centered_moments(x: &[f64]) -> (f64, f64, f64, f64) {
    let n = x.len() as f64;
    let m = mean(x);
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in x {
        let d = v - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    (m, m2 / n, m3 / n, m4 / n)
}

fn check_variance(x: &[f64], what: &str) -> Result<()> {
    let (_, m2, _, _) = centered_moments(x);
    if !(m2 > 0.0) || !m2.is_finite() {
        return Err(Error::domain(format!("{what}: series has zero or non-finite variance")));
    }
    Ok(())
}

/// Descriptive statistics and dependence tests of a return series.
pub fn summary_stats(returns: &[f64], lags: usize) -> Result<SummaryStats> {
    let n = returns.len();
    if lags == 0 || n <= lags + 1 {
        return Err(Error::domain(format!(
            "summary statistics need n > lags + 1 and lags >= 1 (n = {n}, lags = {lags})"
        )));
    }
    check_variance(returns, "summary statistics")?;
    let (m, m2, m3, m4) = centered_moments(returns);
    let nf = n as f64;
    let skewness = m3 / m2.powf(1.5);
    let kurtosis = m4 / (m2 * m2);
    let jb = nf / 6.0 * (skewness * skewness + 0.25 * (kurtosis - 3.0).powi(2));
    let min = returns.iter().copied().fold(f64::INFINITY, f64::min);
    let max = returns.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let squared: Vec<f64> = returns.iter().map(|r| (r - m).powi(2)).collect();
    Ok(SummaryStats {
        n,
        lags,
        min,
        max,
        range: max - min,
        mean: m,
        std_dev: (m2 * nf / (nf - 1.0)).sqrt(),
        skewness,
        kurtosis,
        jarque_bera: TestStat {
            stat: jb,
            p_value: chi2_sf(jb, 2.0),
        },
        ljung_box_returns: ljung_box(returns, lags)?,
        ljung_box_squared: ljung_box(&squared, lags)?,
        arch_lm: arch_lm(returns, lags)?,
    })
}

/// Sample autocorrelations at lags `1..=lags`.
pub fn acf(x: &[f64], lags: usize) -> Result<Vec<f64>> {
    if x.len() <= lags {
        return Err(Error::domain(format!(
            "autocorrelation needs n > lags (n = {}, lags = {lags})",
            x.len()
        )));
    }
    check_variance(x, "autocorrelation")?;
    let m = mean(x);
    let d: Vec<f64> = x.iter().map(|v| v - m).collect();
    let denom: f64 = d.iter().map(|v| v * v).sum();
    Ok((1..=lags)
        .map(|k| d[k..].iter().zip(&d[..d.len() - k]).map(|(a, b)| a * b).sum::<f64>() / denom)
        .collect())
}

/// Autocorrelations and partial autocorrelations (Durbin–Levinson) at lags
/// `1..=lags`.
pub fn acf_pacf(x: &[f64], lags: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let rho = acf(x, lags)?;
    let mut pacf = Vec::with_capacity(lags);
    let mut phi: Vec<f64> = Vec::with_capacity(lags);
    let mut v = 1.0;
    for k in 0..lags {
        let num = rho[k] - phi.iter().enumerate().map(|(j, p)| p * rho[k - 1 - j]).sum::<f64>();
        let a = if v > 0.0 { num / v } else { 0.0 };
        let prev = phi.clone();
        for (j, p) in phi.iter_mut().enumerate() {
            *p = prev[j] - a * prev[k - 1 - j];
        }
        phi.push(a);
        v *= 1.0 - a * a;
        pacf.push(a.clamp(-1.0, 1.0));
    }
    Ok((rho, pacf))
}

/// Ljung–Box portmanteau statistic with a χ²(lags) p-value.
pub fn ljung_box(x: &[f64], lags: usize) -> Result<TestStat> {
    let rho = acf(x, lags)?;
    let n = x.len() as f64;
    let q = n * (n + 2.0)
        * rho
            .iter()
            .enumerate()
            .map(|(k, r)| r * r / (n - (k + 1) as f64))
            .sum::<f64>();
    Ok(TestStat {
        stat: q,
        p_value: chi2_sf(q, lags as f64),
    })
}

/// Engle's LM test: `T·R²` of `e²_t` on a constant and `e²_{t-1..t-lags}`.
pub fn arch_lm(returns: &[f64], lags: usize) -> Result<TestStat> {
    let m = mean(returns);
    let e2: Vec<f64> = returns.iter().map(|r| (r - m).powi(2)).collect();
    let rows = e2.len().saturating_sub(lags);
    if rows <= lags + 1 {
        return Err(Error::domain("ARCH-LM test needs more observations than regressors"));
    }
    let x = DMatrix::from_fn(rows, lags + 1, |i, j| if j == 0 { 1.0 } else { e2[lags + i - j] });
    let y = DVector::from_iterator(rows, e2[lags..].iter().copied());
    let r2 = r_squared(&x, &y)?;
    let stat = rows as f64 * r2;
    Ok(TestStat {
        stat,
        p_value: chi2_sf(stat, lags as f64),
    })
}

fn r_squared(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<f64> {
    let beta = x
        .clone()
        .svd(true, true)
        .solve(y, 1e-12)
        .map_err(|e| Error::NumericFault(format!("least squares failed: {e}")))?;
    let resid = y - x * beta;
    let ybar = y.mean();
    let tss: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
    if !(tss > 0.0) {
        return Err(Error::domain("regression response has zero variance"));
    }
    Ok(1.0 - resid.norm_squared() / tss)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub mse: f64,
    pub mad: f64,
    pub medae: f64,
    pub medape: f64,
    pub hmse: f64,
    pub hmae: f64,
    pub ll: f64,
    pub gmle: f64,
    /// Observations with `ε² = 0`, left out of MedAPE and LL.
    pub excluded_zero: usize,
}

/// The eight volatility losses of a variance forecast `h` against the proxy
/// `ε²`.
///
/// MAD is `mean | |ε| - √h |` with `|ε| = √(ε²)`; MedAPE is the median of
/// `|h - ε²| / ε²`; LL is the mean squared log ratio `ln(ε²/h)²`.
pub fn loss_functions(eps_sq: &[f64], h: &[f64]) -> Result<LossReport> {
    if eps_sq.len() != h.len() {
        return Err(Error::domain(format!(
            "loss functions need equal lengths ({} vs {})",
            eps_sq.len(),
            h.len()
        )));
    }
    if eps_sq.is_empty() {
        return Err(Error::domain("loss functions need observations"));
    }
    if let Some(t) = h.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::domain(format!("variance forecast h[{t}] = {} is not positive", h[t])));
    }
    if let Some(t) = eps_sq.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::domain(format!("proxy eps_sq[{t}] = {} is negative", eps_sq[t])));
    }
    if eps_sq.iter().all(|&v| v == 0.0) {
        return Err(Error::domain("every squared residual is zero"));
    }
    let n = eps_sq.len() as f64;
    let (mut mse, mut mad, mut hmse, mut hmae, mut gmle) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut abs_err = Vec::with_capacity(eps_sq.len());
    let mut ape = Vec::with_capacity(eps_sq.len());
    let mut ll = 0.0;
    for (&e2, &hv) in eps_sq.iter().zip(h) {
        let d = e2 - hv;
        mse += d * d;
        mad += (e2.sqrt() - hv.sqrt()).abs();
        let ratio = e2 / hv;
        hmse += (ratio - 1.0).powi(2);
        hmae += (ratio - 1.0).abs();
        gmle += hv.ln() + ratio;
        abs_err.push(d.abs());
        if e2 > 0.0 {
            ape.push(d.abs() / e2);
            ll += ratio.ln().powi(2);
        }
    }
    let included = ape.len();
    Ok(LossReport {
        mse: mse / n,
        mad: mad / n,
        medae: median(&abs_err).expect("nonempty"),
        medape: median(&ape).expect("some eps_sq > 0"),
        hmse: hmse / n,
        hmae: hmae / n,
        ll: ll / included as f64,
        gmle: gmle / n,
        excluded_zero: eps_sq.len() - included,
    })
}
