//! Loading and validating per-asset daily price series.
//!
//! Input is CSV with the header `symbol,name,date,close,market_cap`, either one
//! file per asset or one long file holding several assets. A directory is read
//! file by file in lexicographic order of file names.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::Serialize;

use crate::error::{Error, Result};

pub const HEADER: [&str; 5] = ["symbol", "name", "date", "close", "market_cap"];

#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    pub symbol: String,
    pub name: String,
    pub dates: Vec<NaiveDate>,
    pub close: Vec<f64>,
    pub market_cap: Vec<Option<f64>>,
}

impl PriceSeries {
    pub fn len(&self) -> usize {
        self.close.len()
    }

    pub fn is_empty(&self) -> bool {
        self.close.is_empty()
    }

    /// Number of log returns this series yields.
    pub fn n_returns(&self) -> usize {
        self.close.len().saturating_sub(1)
    }

    /// Mean market capitalization over the days where it is available.
    pub fn market_cap_mean(&self) -> Option<f64> {
        let (sum, n) = self
            .market_cap
            .iter()
            .flatten()
            .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
        (n > 0).then(|| sum / n as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    pub symbol: String,
    /// Date of the later day of each price pair.
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
}

impl ReturnSeries {
    /// Series without a calendar: observation `i` is dated `i` days after
    /// 1970-01-01.
    pub fn undated(symbol: impl Into<String>, values: Vec<f64>) -> Self {
        let epoch = NaiveDate::from_ymd_opt(1970, 1, 1).expect("valid date");
        Self {
            symbol: symbol.into(),
            dates: (0..values.len() as u64).map(|i| epoch + chrono::Days::new(i)).collect(),
            values,
        }
    }
}

impl ReturnSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A problem found while reading the dataset. `line` is the 1-based line in
/// `file` when the problem is tied to a row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub file: String,
    pub line: Option<u64>,
    pub symbol: Option<String>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.file)?;
        if let Some(line) = self.line {
            write!(f, ":{line}")?;
        }
        if let Some(sym) = &self.symbol {
            write!(f, " [{sym}]")?;
        }
        write!(f, ": {}", self.message)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub series: Vec<PriceSeries>,
    /// Rejected rows and skipped assets.
    pub diagnostics: Vec<Diagnostic>,
}

struct Row {
    file: String,
    line: u64,
    name: String,
    date: NaiveDate,
    close: f64,
    market_cap: Option<f64>,
}

/// Load every asset under `path` (a CSV file or a directory of CSV files).
///
/// Rows that cannot be parsed are dropped with a diagnostic. Assets with a
/// non-positive close, or with dates that are not strictly increasing, are
/// skipped as a whole and reported.
pub fn load_dataset(path: &Path) -> Result<Dataset> {
    if !path.exists() {
        return Err(Error::MissingPath(path.to_path_buf()));
    }
    let files = if path.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.is_file()
                    && p.extension()
                        .is_some_and(|ext| ext.eq_ignore_ascii_case("csv"))
            })
            .collect();
        files.sort();
        files
    } else {
        vec![path.to_path_buf()]
    };

    let mut order: Vec<String> = Vec::new();
    let mut rows: HashMap<String, Vec<Row>> = HashMap::new();
    let mut diagnostics = Vec::new();

    for file in &files {
        let label = file.display().to_string();
        let reader = File::open(file)?;
        read_rows(reader, &label, &mut order, &mut rows, &mut diagnostics)?;
    }

    let mut series = Vec::with_capacity(order.len());
    for symbol in order {
        let asset_rows = rows.remove(&symbol).unwrap_or_default();
        match assemble(&symbol, asset_rows) {
            Ok(s) => series.push(s),
            Err(d) => diagnostics.push(d),
        }
    }
    Ok(Dataset {
        series,
        diagnostics,
    })
}

/// Parse CSV content from any reader; `label` names the source in diagnostics.
pub fn load_reader<R: Read>(reader: R, label: &str) -> Result<Dataset> {
    let mut order = Vec::new();
    let mut rows = HashMap::new();
    let mut diagnostics = Vec::new();
    read_rows(reader, label, &mut order, &mut rows, &mut diagnostics)?;
    let mut series = Vec::new();
    for symbol in order {
        match assemble(&symbol, rows.remove(&symbol).unwrap_or_default()) {
            Ok(s) => series.push(s),
            Err(d) => diagnostics.push(d),
        }
    }
    Ok(Dataset {
        series,
        diagnostics,
    })
}

fn read_rows<R: Read>(
    reader: R,
    label: &str,
    order: &mut Vec<String>,
    rows: &mut HashMap<String, Vec<Row>>,
    diagnostics: &mut Vec<Diagnostic>,
) -> Result<()> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let header = rdr.headers().map_err(|e| Error::Header {
        file: label.to_string(),
        message: e.to_string(),
    })?;
    let got: Vec<&str> = header.iter().collect();
    if got != HEADER {
        return Err(Error::Header {
            file: label.to_string(),
            message: format!("expected `{}`, found `{}`", HEADER.join(","), got.join(",")),
        });
    }

    for record in rdr.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                diagnostics.push(Diagnostic {
                    file: label.to_string(),
                    line: e.position().map(|p| p.line()),
                    symbol: None,
                    message: format!("unreadable row: {e}"),
                });
                continue;
            }
        };
        let line = record.position().map_or(0, |p| p.line());
        let diag = |symbol: Option<&str>, message: String| Diagnostic {
            file: label.to_string(),
            line: Some(line),
            symbol: symbol.map(str::to_string),
            message,
        };
        if record.len() != HEADER.len() {
            diagnostics.push(diag(
                record.get(0),
                format!("expected {} fields, found {}", HEADER.len(), record.len()),
            ));
            continue;
        }
        let symbol = &record[0];
        if symbol.is_empty() {
            diagnostics.push(diag(None, "empty symbol".into()));
            continue;
        }
        let date = match NaiveDate::parse_from_str(&record[2], "%Y-%m-%d") {
            Ok(d) => d,
            Err(e) => {
                diagnostics.push(diag(Some(symbol), format!("bad date `{}`: {e}", &record[2])));
                continue;
            }
        };
        let close = match record[3].parse::<f64>() {
            Ok(c) if c.is_finite() => c,
            _ => {
                diagnostics.push(diag(Some(symbol), format!("bad close `{}`", &record[3])));
                continue;
            }
        };
        let market_cap = match &record[4] {
            "" => None,
            s => match s.parse::<f64>() {
                Ok(v) if v.is_finite() && v >= 0.0 => Some(v),
                _ => {
                    diagnostics.push(diag(Some(symbol), format!("bad market_cap `{s}`")));
                    continue;
                }
            },
        };
        let entry = rows.entry(symbol.to_string()).or_insert_with(|| {
            order.push(symbol.to_string());
            Vec::new()
        });
        entry.push(Row {
            file: label.to_string(),
            line,
            name: record[1].to_string(),
            date,
            close,
            market_cap,
        });
    }
    Ok(())
}

fn assemble(symbol: &str, rows: Vec<Row>) -> std::result::Result<PriceSeries, Diagnostic> {
    let reject = |row: &Row, message: String| Diagnostic {
        file: row.file.clone(),
        line: Some(row.line),
        symbol: Some(symbol.to_string()),
        message: format!("asset skipped: {message}"),
    };
    for (i, row) in rows.iter().enumerate() {
        if row.close <= 0.0 {
            return Err(reject(row, format!("non-positive close {}", row.close)));
        }
        if i > 0 {
            let prev = rows[i - 1].date;
            if row.date == prev {
                return Err(reject(row, format!("duplicate date {}", row.date)));
            }
            if row.date < prev {
                return Err(reject(
                    row,
                    format!("date {} not after previous {prev}", row.date),
                ));
            }
        }
    }
    let name = rows.first().map(|r| r.name.clone()).unwrap_or_default();
    Ok(PriceSeries {
        symbol: symbol.to_string(),
        name,
        dates: rows.iter().map(|r| r.date).collect(),
        close: rows.iter().map(|r| r.close).collect(),
        market_cap: rows.iter().map(|r| r.market_cap).collect(),
    })
}

/// Keep the assets with strictly more than `min_returns` log returns, in order.
pub fn filter_by_length(series: Vec<PriceSeries>, min_returns: usize) -> Vec<PriceSeries> {
    series
        .into_iter()
        .filter(|s| s.n_returns() > min_returns)
        .collect()
}

/// Natural-log returns between consecutive available observations.
pub fn log_returns(prices: &PriceSeries) -> Result<ReturnSeries> {
    if prices.close.len() < 2 {
        return Err(Error::insufficient(format!(
            "{}: need at least 2 prices for a return, got {}",
            prices.symbol,
            prices.close.len()
        )));
    }
    if let Some(i) = prices.close.iter().position(|&c| c.is_nan() || c <= 0.0) {
        return Err(Error::invalid(format!(
            "{}: non-positive price {} at index {i}",
            prices.symbol, prices.close[i]
        )));
    }
    let values = prices
        .close
        .windows(2)
        .map(|w| w[1].ln() - w[0].ln())
        .collect();
    Ok(ReturnSeries {
        symbol: prices.symbol.clone(),
        dates: prices.dates[1..].to_vec(),
        values,
    })
}
