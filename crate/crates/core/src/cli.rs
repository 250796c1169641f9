//! Command-line driver.
//!
//! Exit codes: 0 success, 1 domain or usage error, 2 convergence failure,
//! 3 I/O error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate, Weekday};
use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::aparch::{
    aparch_filter, aparch_fit, aparch_loglik, aparch_simulate, AparchParams, FitOptions, PARAM_NAMES,
};
use crate::data_io::{
    fingerprint, parse_prices, restrict_dates, to_returns, write_report, AcfTable, FitReport, InputInfo,
    ParamRow, Report, TailReport, SCHEMA_VERSION,
};
use crate::diagnostics::{acf_pacf, loss_functions, summary_stats};
use crate::error::{Error, Result};
use crate::risk::{backtest, BacktestOptions, Tce2Convention, DEFAULT_DQ_LAGS, DEFAULT_LEVELS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Summary statistics and autocorrelations of the returns.
    Stats,
    /// Estimate the model; report parameters and volatility losses.
    Fit,
    /// VaR backtests and tail measures at supplied parameters.
    Backtest,
    /// Write a synthetic price series from supplied parameters.
    Simulate,
    /// Everything: stats, fit (or pinned parameters), losses, backtests.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Tce2Arg {
    MeanOfRatios,
    RatioOfMeans,
}

/// APARCH(1,1) with standardized Pearson IV innovations: estimation,
/// diagnostics and VaR backtesting.
#[derive(Debug, Parser)]
#[command(name = "spiv-aparch", version)]
pub struct Cli {
    /// Price CSV with a header row and `date,price` columns.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "full")]
    pub command: Command,
    /// Comma-separated VaR levels; below 0.5 long, otherwise short.
    #[arg(long, value_delimiter = ',')]
    pub quantiles: Option<Vec<f64>>,
    /// Lags in the dynamic quantile regression.
    #[arg(long, default_value_t = DEFAULT_DQ_LAGS)]
    pub dq_lags: usize,
    /// Cost of capital in the Sarma firm loss.
    #[arg(long, default_value_t = 0.01)]
    pub opportunity_cost: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Report path (JSON); for `simulate`, the CSV to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// key=value parameter file (mu, omega, alpha, beta, gamma, delta, nu, m).
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long, default_value_t = 5000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 1)]
    pub multi_start: usize,
    /// First price date kept (YYYY-MM-DD).
    #[arg(long)]
    pub from: Option<NaiveDate>,
    /// Last price date kept (YYYY-MM-DD).
    #[arg(long)]
    pub to: Option<NaiveDate>,
    /// Lags for Ljung–Box, ARCH-LM and the autocorrelation tables.
    #[arg(long, default_value_t = 12)]
    pub lags: usize,
    /// Number of simulated returns.
    #[arg(long, default_value_t = 6650)]
    pub length: usize,
    /// Simulated returns discarded before the kept sample.
    #[arg(long, default_value_t = 1000)]
    pub burn_in: usize,
    /// Aggregation of the TCE-to-VaR multiple.
    #[arg(long, value_enum, default_value = "mean-of-ratios")]
    pub tce2: Tce2Arg,
}

/// The resolved configuration; stored in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub input: Option<PathBuf>,
    pub out: PathBuf,
    pub quantiles: Vec<f64>,
    pub lags: usize,
    pub backtest: BacktestOptions,
    pub fit: FitOptions,
    pub params_file: Option<PathBuf>,
    /// Parameters read from `params_file`, by name.
    pub params: Option<BTreeMap<String, f64>>,
    pub from: Option<NaiveDate>,
    pub to: Option<NaiveDate>,
    pub length: usize,
    pub burn_in: usize,
}

impl RunConfig {
    pub fn from_cli(cli: Cli) -> Result<Self> {
        let quantiles = cli.quantiles.unwrap_or_else(|| DEFAULT_LEVELS.to_vec());
        if quantiles.is_empty() {
            return Err(Error::Usage("--quantiles needs at least one level".into()));
        }
        if let Some(q) = quantiles.iter().find(|q| !(**q > 0.0 && **q < 1.0)) {
            return Err(Error::Usage(format!("quantile {q} is outside (0, 1)")));
        }
        if cli.dq_lags == 0 {
            return Err(Error::Usage("--dq-lags must be at least 1".into()));
        }
        if cli.lags == 0 {
            return Err(Error::Usage("--lags must be at least 1".into()));
        }
        if !(cli.opportunity_cost >= 0.0) {
            return Err(Error::Usage("--opportunity-cost must be nonnegative".into()));
        }
        if !(cli.tol > 0.0) || cli.max_iter == 0 || cli.multi_start == 0 {
            return Err(Error::Usage(
                "--tol must be positive; --max-iter and --multi-start at least 1".into(),
            ));
        }
        if let (Some(f), Some(t)) = (cli.from, cli.to) {
            if f > t {
                return Err(Error::Usage(format!("--from {f} is after --to {t}")));
            }
        }
        match cli.command {
            Command::Fit if cli.params.is_some() => {
                return Err(Error::Usage(
                    "`fit` estimates the parameters; use `full --params FILE` to evaluate fixed ones".into(),
                ));
            }
            Command::Simulate => {
                if cli.params.is_none() {
                    return Err(Error::Usage("`simulate` needs --params FILE".into()));
                }
                if cli.length == 0 {
                    return Err(Error::Usage("--length must be at least 1".into()));
                }
            }
            Command::Backtest if cli.params.is_none() => {
                return Err(Error::Usage(
                    "`backtest` needs parameters: run `fit` (it writes OUT.params) and pass --params FILE".into(),
                ));
            }
            Command::Stats | Command::Fit | Command::Backtest | Command::Full if cli.input.is_none() => {
                return Err(Error::Usage(format!("`{:?}` needs --input FILE", cli.command).to_lowercase()));
            }
            _ => {}
        }
        let params = cli.params.as_deref().map(read_params_file).transpose()?;
        let out = cli.out.unwrap_or_else(|| {
            PathBuf::from(if cli.command == Command::Simulate {
                "simulated.csv"
            } else {
                "report.json"
            })
        });
        Ok(Self {
            command: cli.command,
            input: cli.input,
            out,
            quantiles,
            lags: cli.lags,
            backtest: BacktestOptions {
                dq_lags: cli.dq_lags,
                opportunity_cost: cli.opportunity_cost,
                tce2: match cli.tce2 {
                    Tce2Arg::MeanOfRatios => Tce2Convention::MeanOfRatios,
                    Tce2Arg::RatioOfMeans => Tce2Convention::RatioOfMeans,
                },
            },
            fit: FitOptions {
                max_iter: cli.max_iter,
                tol: cli.tol,
                multi_start: cli.multi_start,
                seed: cli.seed,
            },
            params_file: cli.params,
            params,
            from: cli.from,
            to: cli.to,
            length: cli.length,
            burn_in: cli.burn_in,
        })
    }

    fn aparch_params(&self) -> Result<Option<AparchParams>> {
        let Some(map) = &self.params else {
            return Ok(None);
        };
        let v: Vec<f64> = PARAM_NAMES.iter().map(|k| map[*k]).collect();
        AparchParams::from_vector(&v).map(Some)
    }
}

/// Parses `name=value` lines; `#` starts a comment. All eight names are
/// required.
pub fn read_params_file(path: &Path) -> Result<BTreeMap<String, f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| parse_err(i + 1, format!("expected name=value, got {line:?}")))?;
        let k = k.trim();
        if !PARAM_NAMES.contains(&k) {
            return Err(parse_err(
                i + 1,
                format!("unknown parameter {k:?}; expected one of {}", PARAM_NAMES.join(", ")),
            ));
        }
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| parse_err(i + 1, format!("bad value for {k}: {:?}", v.trim())))?;
        if map.insert(k.to_string(), v).is_some() {
            return Err(parse_err(i + 1, format!("{k} given twice")));
        }
    }
    let missing: Vec<&str> = PARAM_NAMES.iter().copied().filter(|k| !map.contains_key(*k)).collect();
    if !missing.is_empty() {
        return Err(parse_err(0, format!("missing parameters: {}", missing.join(", "))));
    }
    Ok(map)
}

pub fn write_params_file(params: &AparchParams, path: &Path) -> Result<()> {
    let mut s = String::new();
    for (k, v) in PARAM_NAMES.iter().zip(params.to_vector()) {
        let _ = writeln!(s, "{k}={v}");
    }
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NonConvergence(_) => 2,
        Error::Io { .. } => 3,
        _ => 1,
    }
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map_or_else(|| "report".into(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}{suffix}"))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Runs a configuration; returns the process exit code.
pub fn run(config: &RunConfig) -> i32 {
    log::info!("resolved configuration: {config:?}");
    match execute(config) {
        Ok(true) => 0,
        Ok(false) => {
            eprintln!("warning: the optimizer stopped at its iteration cap; results are the best point found");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Returns whether every optimization converged.
pub fn execute(config: &RunConfig) -> Result<bool> {
    if config.command == Command::Simulate {
        simulate(config)?;
        return Ok(true);
    }
    let input = config.input.as_deref().expect("checked in from_cli");
    let bytes = fs::read(input).map_err(|e| Error::io(input, e))?;
    let prices = restrict_dates(&parse_prices(input, &bytes)?, config.from, config.to);
    let label = input.display().to_string();
    let series = to_returns(&prices.dates, &prices.prices, &label)?;
    let r = &series.returns;
    let mut flags = Vec::new();
    if prices.dropped > 0 {
        flags.push(format!("{} input rows with missing prices dropped", prices.dropped));
    }

    let mut report = Report {
        schema_version: SCHEMA_VERSION,
        config: serde_json::to_value(config).map_err(|e| Error::NumericFault(e.to_string()))?,
        input: InputInfo {
            label,
            sha256: fingerprint(&bytes),
            n_prices: prices.prices.len(),
            n_returns: r.len(),
            dropped_rows: prices.dropped,
            first_date: prices.dates.first().copied(),
            last_date: prices.dates.last().copied(),
        },
        summary: None,
        acf: None,
        fit: None,
        losses: None,
        backtest: None,
        tails: None,
        flags: Vec::new(),
    };

    let wants = |c: Command| config.command == c || config.command == Command::Full;
    if wants(Command::Stats) {
        report.summary = Some(summary_stats(r, config.lags)?);
        let abs: Vec<f64> = r.iter().map(|v| v.abs()).collect();
        let sq: Vec<f64> = r.iter().map(|v| v * v).collect();
        let (returns_acf, returns_pacf) = acf_pacf(r, config.lags)?;
        let (abs_acf, abs_pacf) = acf_pacf(&abs, config.lags)?;
        let (squared_acf, squared_pacf) = acf_pacf(&sq, config.lags)?;
        report.acf = Some(AcfTable {
            lags: config.lags,
            returns_acf,
            returns_pacf,
            abs_acf,
            abs_pacf,
            squared_acf,
            squared_pacf,
        });
    }

    let mut converged = true;
    let needs_model = config.command != Command::Stats;
    let model = if !needs_model {
        None
    } else if let Some(p) = config.aparch_params()? {
        flags.push("parameters supplied, not estimated; standard errors not computed".into());
        let loglik = aparch_loglik(&p, r);
        report.fit = Some(FitReport {
            estimated: false,
            params: PARAM_NAMES
                .iter()
                .zip(p.to_vector())
                .map(|(n, v)| ParamRow {
                    name: n.to_string(),
                    value: v,
                    robust_se: f64::NAN,
                    t_stat: f64::NAN,
                    p_value: f64::NAN,
                })
                .collect(),
            loglik,
            persistence: p.persistence()?,
            converged: true,
            iterations: 0,
            se_error: None,
        });
        Some(p)
    } else {
        let fit = aparch_fit(r, &config.fit)?;
        converged = fit.converged;
        if !fit.converged {
            flags.push(format!("optimizer hit the iteration cap ({})", config.fit.max_iter));
        }
        if let Some(e) = &fit.se_error {
            flags.push(format!("robust standard errors unavailable: {e}"));
        }
        let est = fit.params.to_vector();
        report.fit = Some(FitReport {
            estimated: true,
            params: (0..8)
                .map(|i| ParamRow {
                    name: PARAM_NAMES[i].to_string(),
                    value: est[i],
                    robust_se: fit.robust_se[i],
                    t_stat: fit.t_stats[i],
                    p_value: fit.p_values[i],
                })
                .collect(),
            loglik: fit.loglik,
            persistence: fit.persistence,
            converged: fit.converged,
            iterations: fit.iterations,
            se_error: fit.se_error.clone(),
        });
        write_params_file(&fit.params, &sibling(&config.out, ".params"))?;
        Some(fit.params)
    };

    if let Some(p) = model {
        let state = aparch_filter(&p, r)?;
        if wants(Command::Fit) {
            let eps_sq: Vec<f64> = state.residuals.iter().map(|e| e * e).collect();
            let losses = loss_functions(&eps_sq, &state.variance(p.delta))?;
            if losses.excluded_zero > 0 {
                flags.push(format!(
                    "{} zero squared residuals excluded from MedAPE and LL",
                    losses.excluded_zero
                ));
            }
            report.losses = Some(losses);
        }
        if wants(Command::Backtest) {
            let sigma = state.sigma(p.delta);
            let levels = backtest(r, p.mu, &sigma, &p.spiv, &config.quantiles, &config.backtest)?;
            for l in &levels {
                let b = &l.backtest;
                if b.independence.degenerate {
                    flags.push(format!("level {}: no violations, independence test set to p = 1", b.level));
                }
                if b.dq.degenerate {
                    flags.push(format!("level {}: singular DQ regressors, p set to 1", b.level));
                }
                if l.tail.undefined {
                    flags.push(format!("level {}: no violations, tail measures undefined", b.level));
                } else if l.tail.lambda <= 1.0 {
                    flags.push(format!(
                        "level {}: violation ratio {:.4} <= 1, expected shortfall equals TCE",
                        b.level, l.tail.lambda
                    ));
                }
                if b.violations == 1 {
                    flags.push(format!("level {}: a single violation", b.level));
                }
            }
            write_var_csv(&sibling(&config.out, "_var.csv"), &series.dates, r, &sigma, &p, &config.quantiles)?;
            report.backtest = Some(levels.iter().map(|l| l.backtest.clone()).collect());
            report.tails = Some(
                levels
                    .into_iter()
                    .map(|l| TailReport {
                        row: l.tail,
                        standardized_quantile: l.standardized_quantile,
                    })
                    .collect(),
            );
        }
    }

    report.flags = flags;
    write_report(&report, &config.out)?;
    write_text(&sibling(&config.out, ".txt"), &render_tables(&report))?;
    if let Some(acf) = &report.acf {
        write_acf_csv(&sibling(&config.out, "_acf.csv"), acf)?;
    }
    Ok(converged)
}

fn simulate(config: &RunConfig) -> Result<()> {
    let p = config.aparch_params()?.expect("checked in from_cli");
    let r = aparch_simulate(&p, config.length, config.burn_in, config.fit.seed)?;
    let mut date = NaiveDate::from_ymd_opt(2000, 1, 3).expect("valid date");
    let mut price = 100.0f64;
    let mut s = String::from("date,price\n");
    let _ = writeln!(s, "{date},{price}");
    for x in &r {
        date = next_weekday(date);
        price *= (x / 100.0).exp();
        let _ = writeln!(s, "{date},{price}");
    }
    write_text(&config.out, &s)
}

fn next_weekday(d: NaiveDate) -> NaiveDate {
    let mut n = d.succ_opt().expect("date in range");
    while matches!(n.weekday(), Weekday::Sat | Weekday::Sun) {
        n = n.succ_opt().expect("date in range");
    }
    n
}

fn write_acf_csv(path: &Path, t: &AcfTable) -> Result<()> {
    let mut s = String::from("lag,returns_acf,returns_pacf,abs_acf,abs_pacf,squared_acf,squared_pacf\n");
    for k in 0..t.lags {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            k + 1,
            t.returns_acf[k],
            t.returns_pacf[k],
            t.abs_acf[k],
            t.abs_pacf[k],
            t.squared_acf[k],
            t.squared_pacf[k]
        );
    }
    write_text(path, &s)
}

fn write_var_csv(
    path: &Path,
    dates: &[NaiveDate],
    r: &[f64],
    sigma: &[f64],
    p: &AparchParams,
    levels: &[f64],
) -> Result<()> {
    let q: Vec<f64> = levels.iter().map(|&a| p.spiv.quantile(a)).collect::<Result<_>>()?;
    let mut s = String::from("date,return,sigma");
    for a in levels {
        let _ = write!(s, ",var_{a}");
    }
    s.push('\n');
    for t in 0..r.len() {
        let _ = write!(s, "{},{},{}", dates[t], r[t], sigma[t]);
        for qa in &q {
            let _ = write!(s, ",{}", p.mu + qa * sigma[t]);
        }
        s.push('\n');
    }
    write_text(path, &s)
}

fn opt(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.4}")
    } else {
        "-".into()
    }
}

/// Aligned plain-text rendering of the report tables.
pub fn render_tables(r: &Report) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "input: {} ({} returns, sha256 {})", r.input.label, r.input.n_returns, r.input.sha256);
    if let Some(t) = &r.summary {
        let _ = writeln!(s, "\nSummary statistics");
        for (k, v) in [
            ("min", t.min),
            ("max", t.max),
            ("range", t.range),
            ("mean", t.mean),
            ("std dev", t.std_dev),
            ("skewness", t.skewness),
            ("kurtosis", t.kurtosis),
        ] {
            let _ = writeln!(s, "  {k:<22}{v:>14.4}");
        }
        for (k, v) in [
            ("Jarque-Bera", t.jarque_bera),
            (&*format!("Ljung-Box({})", t.lags), t.ljung_box_returns),
            (&*format!("Ljung-Box^2({})", t.lags), t.ljung_box_squared),
            (&*format!("ARCH-LM({})", t.lags), t.arch_lm),
        ] {
            let _ = writeln!(s, "  {k:<22}{:>14.4}  p = {:.4}", v.stat, v.p_value);
        }
    }
    if let Some(f) = &r.fit {
        let _ = writeln!(s, "\nAPARCH(1,1)-SPIV {}", if f.estimated { "estimates" } else { "(supplied parameters)" });
        let _ = writeln!(s, "  {:<8}{:>12}{:>12}{:>12}{:>10}", "param", "value", "robust SE", "t-stat", "p-value");
        for p in &f.params {
            let _ = writeln!(
                s,
                "  {:<8}{:>12.4}{:>12}{:>12}{:>10}",
                p.name,
                p.value,
                opt(p.robust_se),
                opt(p.t_stat),
                opt(p.p_value)
            );
        }
        let _ = writeln!(s, "  persistence {:.4}   log-likelihood {:.2}", f.persistence, f.loglik);
    }
    if let Some(l) = &r.losses {
        let _ = writeln!(s, "\nVolatility losses");
        for (k, v) in [
            ("MSE", l.mse),
            ("MAD", l.mad),
            ("MedAE", l.medae),
            ("MedAPE", l.medape),
            ("HMSE", l.hmse),
            ("HMAE", l.hmae),
            ("LL", l.ll),
            ("GMLE", l.gmle),
        ] {
            let _ = writeln!(s, "  {k:<8}{v:>14.4}");
        }
    }
    if let Some(rows) = &r.backtest {
        let _ = writeln!(s, "\nVaR backtests");
        let _ = writeln!(
            s,
            "  {:>7}{:>6}{:>10}{:>10}{:>10}{:>10}{:>10}{:>12}{:>12}",
            "level", "x", "ratio", "Kupiec", "indep", "CC", "DQ", "Lopez", "Sarma"
        );
        for b in rows {
            let _ = writeln!(
                s,
                "  {:>7}{:>6}{:>10.6}{:>10.4}{:>10.4}{:>10.4}{:>10.4}{:>12.3}{:>12.3}",
                b.level,
                b.violations,
                b.ratio,
                b.kupiec.p_value,
                b.independence.p_value,
                b.conditional.p_value,
                b.dq.p_value,
                b.lopez,
                b.sarma_regulatory
            );
        }
    }
    if let Some(rows) = &r.tails {
        let _ = writeln!(s, "\nTail measures");
        let _ = writeln!(
            s,
            "  {:>7}{:>10}{:>10}{:>10}{:>10}{:>10}{:>10}",
            "level", "P^-1(a)", "mean VaR", "TCE1", "TCE2", "ES", "lambda"
        );
        for t in rows {
            let _ = writeln!(
                s,
                "  {:>7}{:>10.4}{:>10.4}{:>10}{:>10}{:>10}{:>10.4}",
                t.row.level,
                t.standardized_quantile,
                t.row.var_mean,
                opt(t.row.tce1),
                opt(t.row.tce2),
                opt(t.row.es),
                t.row.lambda
            );
        }
    }
    if !r.flags.is_empty() {
        let _ = writeln!(s, "\nNotes");
        for f in &r.flags {
            let _ = writeln!(s, "  - {f}");
        }
    }
    s
}

/// Parses arguments, runs, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match RunConfig::from_cli(cli) {
        Ok(config) => run(&config),
        Err(e) => {
            eprintln!("error: {e}\n\nRun with --help for usage.");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<RunConfig> {
        let cli = Cli::try_parse_from(std::iter::once("spiv-aparch").chain(args.iter().copied())).unwrap();
        RunConfig::from_cli(cli)
    }

    #[test]
    fn defaults_reproduce_reference_configuration() {
        let c = parse(&["--input", "x.csv"]).unwrap();
        assert_eq!(c.command, Command::Full);
        assert_eq!(c.quantiles, DEFAULT_LEVELS.to_vec());
        assert_eq!(c.backtest.dq_lags, 5);
        assert_eq!(c.fit.max_iter, 5000);
        assert_eq!(c.fit.tol, 1e-8);
        assert_eq!(c.out, PathBuf::from("report.json"));
    }

    #[test]
    fn usage_errors() {
        assert!(matches!(parse(&["--command", "backtest", "--input", "x.csv"]), Err(Error::Usage(_))));
        assert!(matches!(parse(&["--command", "stats"]), Err(Error::Usage(_))));
        assert!(matches!(parse(&["--input", "x", "--quantiles", "0.5,1.2"]), Err(Error::Usage(_))));
        assert!(matches!(parse(&["--input", "x", "--dq-lags", "0"]), Err(Error::Usage(_))));
        assert!(matches!(parse(&["--command", "simulate"]), Err(Error::Usage(_))));
        assert!(Cli::try_parse_from(["spiv-aparch", "--bogus"]).is_err());
        assert_eq!(main_with_args(["spiv-aparch", "--bogus"]), 1);
        assert_eq!(main_with_args(["spiv-aparch", "--command", "backtest", "--input", "x.csv"]), 1);
    }

    #[test]
    fn params_file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.params");
        let p = AparchParams::from_vector(&[0.0058, 0.0166, 0.0586, 0.9493, 0.2043, 1.1946, 0.4748, 5.6275]).unwrap();
        write_params_file(&p, &path).unwrap();
        let map = read_params_file(&path).unwrap();
        let v: Vec<f64> = PARAM_NAMES.iter().map(|k| map[*k]).collect();
        assert_eq!(v, p.to_vector().to_vec());

        fs::write(&path, "mu=1\nomega=2\n").unwrap();
        let e = read_params_file(&path).unwrap_err().to_string();
        assert!(e.contains("missing parameters"), "{e}");
        fs::write(&path, "mu=1\nsigma=2\n").unwrap();
        assert!(matches!(read_params_file(&path), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn weekday_calendar() {
        let fri = NaiveDate::from_ymd_opt(2000, 1, 7).unwrap();
        assert_eq!(next_weekday(fri), NaiveDate::from_ymd_opt(2000, 1, 10).unwrap());
    }

    #[test]
    fn error_exit_codes() {
        assert_eq!(exit_code(&Error::domain("x")), 1);
        assert_eq!(exit_code(&Error::NonConvergence("x".into())), 2);
        assert_eq!(exit_code(&Error::io("p", std::io::Error::other("x"))), 3);
    }
}
