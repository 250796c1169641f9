//! Price ingestion, percentage log returns and the JSON report.

use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diagnostics::{LossReport, SummaryStats};
use crate::error::{Error, Result};
use crate::risk::{BacktestRow, TailRow};

/// Version of the report layout; bumped on any incompatible change.
pub const SCHEMA_VERSION: u32 = 1;

/// Serializes non-finite floats as `null` and reads `null` back as NaN.
pub mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

/// [`nan_as_null`] for vectors.
pub mod vec_nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|x| x.is_finite().then_some(*x)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let v = Vec::<Option<f64>>::deserialize(d)?;
        Ok(v.into_iter().map(|x| x.unwrap_or(f64::NAN)).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    pub dates: Vec<NaiveDate>,
    pub prices: Vec<f64>,
    /// Rows skipped for an empty or `.` price.
    pub dropped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries {
    /// Date of the later price of each pair.
    pub dates: Vec<NaiveDate>,
    pub returns: Vec<f64>,
    pub source_label: String,
}

fn parse_error(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line: line as usize,
        message: message.into(),
    }
}

/// Reads `date,price` rows (ISO dates, header row required).
///
/// Any header names are accepted, so a FRED download (`DATE,DCOILWTICO`,
/// with `.` for missing values) loads unchanged. Rows with an empty or `.`
/// price are dropped; the previous close then pairs with the next one.
pub fn load_prices_csv(path: &Path) -> Result<PriceSeries> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_prices(path, &bytes)
}

pub(crate) fn parse_prices(path: &Path, bytes: &[u8]) -> Result<PriceSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let header = reader
        .headers()
        .map_err(|e| parse_error(path, 1, e.to_string()))?
        .clone();
    if header.len() < 2 {
        return Err(parse_error(path, 1, "expected a `date,price` header row"));
    }
    if NaiveDate::parse_from_str(&header[0], "%Y-%m-%d").is_ok() {
        return Err(parse_error(path, 1, "missing header row (first line is data)"));
    }
    let mut dates = Vec::new();
    let mut prices = Vec::new();
    let mut dropped = 0;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() < 2 {
            return Err(parse_error(path, line, "expected two fields `date,price`"));
        }
        let date = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d")
            .map_err(|e| parse_error(path, line, format!("bad date {:?}: {e}", &record[0])))?;
        let raw = &record[1];
        if raw.is_empty() || raw == "." {
            dropped += 1;
            continue;
        }
        let price: f64 = raw
            .parse()
            .map_err(|_| parse_error(path, line, format!("bad price {raw:?}")))?;
        if !price.is_finite() {
            return Err(parse_error(path, line, format!("non-finite price {raw:?}")));
        }
        if let Some(&last) = dates.last() {
            if date <= last {
                return Err(parse_error(
                    path,
                    line,
                    format!("date {date} does not follow {last}; dates must increase strictly"),
                ));
            }
        }
        dates.push(date);
        prices.push(price);
    }
    if prices.is_empty() {
        return Err(parse_error(path, 1, "file contains no price rows"));
    }
    if dropped > 0 {
        log::info!("{}: dropped {dropped} rows with missing prices", path.display());
    }
    Ok(PriceSeries {
        dates,
        prices,
        dropped,
    })
}

/// `r_t = 100 ln(p_t / p_{t-1})`.
pub fn to_returns(dates: &[NaiveDate], prices: &[f64], source_label: &str) -> Result<ReturnSeries> {
    if prices.len() < 2 || dates.len() != prices.len() {
        return Err(Error::domain(format!(
            "returns need at least two prices with matching dates ({} prices, {} dates)",
            prices.len(),
            dates.len()
        )));
    }
    if let Some(t) = prices.iter().position(|p| !(*p > 0.0)) {
        return Err(Error::domain(format!(
            "price {} on {} is not positive",
            prices[t], dates[t]
        )));
    }
    Ok(ReturnSeries {
        dates: dates[1..].to_vec(),
        returns: prices.windows(2).map(|w| 100.0 * (w[1] / w[0]).ln()).collect(),
        source_label: source_label.to_string(),
    })
}

/// Keeps prices dated within `[from, to]` (either bound optional).
pub fn restrict_dates(series: &PriceSeries, from: Option<NaiveDate>, to: Option<NaiveDate>) -> PriceSeries {
    let keep = |d: &NaiveDate| from.is_none_or(|f| *d >= f) && to.is_none_or(|t| *d <= t);
    let (dates, prices) = series
        .dates
        .iter()
        .zip(&series.prices)
        .filter(|(d, _)| keep(d))
        .map(|(d, p)| (*d, *p))
        .unzip();
    PriceSeries {
        dates,
        prices,
        dropped: series.dropped,
    }
}

/// Lowercase hex SHA-256 of `bytes`.
pub fn fingerprint(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputInfo {
    pub label: String,
    pub sha256: String,
    pub n_prices: usize,
    pub n_returns: usize,
    pub dropped_rows: usize,
    pub first_date: Option<NaiveDate>,
    pub last_date: Option<NaiveDate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcfTable {
    pub lags: usize,
    pub returns_acf: Vec<f64>,
    pub returns_pacf: Vec<f64>,
    pub abs_acf: Vec<f64>,
    pub abs_pacf: Vec<f64>,
    pub squared_acf: Vec<f64>,
    pub squared_pacf: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamRow {
    pub name: String,
    pub value: f64,
    #[serde(with = "nan_as_null")]
    pub robust_se: f64,
    #[serde(with = "nan_as_null")]
    pub t_stat: f64,
    #[serde(with = "nan_as_null")]
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// `false` when the parameters were supplied rather than estimated.
    pub estimated: bool,
    pub params: Vec<ParamRow>,
    pub loglik: f64,
    pub persistence: f64,
    pub converged: bool,
    pub iterations: usize,
    pub se_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    #[serde(flatten)]
    pub row: TailRow,
    pub standardized_quantile: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    /// The resolved run configuration.
    pub config: serde_json::Value,
    pub input: InputInfo,
    pub summary: Option<SummaryStats>,
    pub acf: Option<AcfTable>,
    pub fit: Option<FitReport>,
    pub losses: Option<LossReport>,
    pub backtest: Option<Vec<BacktestRow>>,
    pub tails: Option<Vec<TailReport>>,
    /// Degeneracies, exclusions and other notes a reader should see.
    pub flags: Vec<String>,
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)
            .map_err(|e| Error::NumericFault(format!("report serialization failed: {e}")))?;
        s.push('\n');
        Ok(s)
    }
}

pub fn write_report(report: &Report, path: &Path) -> Result<()> {
    fs::write(path, report.to_json()?).map_err(|e| Error::io(path, e))
}

pub fn read_report(path: &Path) -> Result<Report> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}
