//! Price ingestion: load per-ticker close-price CSVs, align them on a
//! common trading calendar, apply the missing-history policy, and split
//! into training and test windows.
//!
//! The alignment policy is union-of-dates with forward-fill for interior
//! gaps. Tickers whose history starts too late to cover the required
//! fraction of the training window are dropped and recorded in
//! [`PriceTable::excluded`] rather than imputed. Leading gaps are never
//! filled; after the coverage filter the calendar is trimmed to start at
//! the latest first-observation date among retained tickers so the price
//! matrix stays dense.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use crate::error::{Error, Result};

pub const DEFAULT_DATE_FORMAT: &str = "%Y-%m-%d";
pub const DEFAULT_COVERAGE_THRESHOLD: f64 = 0.95;

/// An ordered list of trading dates, strictly increasing with no duplicates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TradingCalendar {
    dates: Vec<NaiveDate>,
}

impl TradingCalendar {
    pub fn new(dates: Vec<NaiveDate>) -> Result<Self> {
        for pair in dates.windows(2) {
            if pair[0] >= pair[1] {
                return Err(Error::InvalidInput(format!(
                    "calendar dates not strictly increasing: {} then {}",
                    pair[0], pair[1]
                )));
            }
        }
        Ok(TradingCalendar { dates })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn first(&self) -> Option<NaiveDate> {
        self.dates.first().copied()
    }

    pub fn last(&self) -> Option<NaiveDate> {
        self.dates.last().copied()
    }

    /// Dates falling inside `[start, end]`, with their positions.
    pub fn range(&self, start: NaiveDate, end: NaiveDate) -> (usize, usize) {
        let lo = self.dates.partition_point(|d| *d < start);
        let hi = self.dates.partition_point(|d| *d <= end);
        (lo, hi)
    }
}

/// A ticker dropped during alignment, with the reason.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exclusion {
    pub ticker: String,
    pub reason: String,
}

/// Aligned close prices: a dense `[date x ticker]` matrix over a common
/// trading calendar. Every retained ticker has a strictly positive price
/// on every calendar date.
#[derive(Debug, Clone)]
pub struct PriceTable {
    calendar: TradingCalendar,
    tickers: Vec<String>,
    /// Row-major `[date][ticker]`.
    prices: Vec<f64>,
    excluded: Vec<Exclusion>,
    diagnostics: Vec<String>,
}

impl PriceTable {
    pub fn new(
        calendar: TradingCalendar,
        tickers: Vec<String>,
        prices: Vec<f64>,
        excluded: Vec<Exclusion>,
    ) -> Result<Self> {
        if prices.len() != calendar.len() * tickers.len() {
            return Err(Error::InvalidInput(format!(
                "price matrix has {} entries, expected {} dates x {} tickers",
                prices.len(),
                calendar.len(),
                tickers.len()
            )));
        }
        for (i, a) in tickers.iter().enumerate() {
            if tickers[i + 1..].contains(a) {
                return Err(Error::InvalidInput(format!("duplicate ticker {a}")));
            }
        }
        if let Some(p) = prices.iter().find(|p| !(**p > 0.0) || !p.is_finite()) {
            return Err(Error::InvalidInput(format!("non-positive price {p}")));
        }
        Ok(PriceTable {
            calendar,
            tickers,
            prices,
            excluded,
            diagnostics: Vec::new(),
        })
    }

    pub fn calendar(&self) -> &TradingCalendar {
        &self.calendar
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn n_dates(&self) -> usize {
        self.calendar.len()
    }

    pub fn n_tickers(&self) -> usize {
        self.tickers.len()
    }

    pub fn price(&self, date_idx: usize, ticker_idx: usize) -> f64 {
        self.prices[date_idx * self.tickers.len() + ticker_idx]
    }

    pub fn row(&self, date_idx: usize) -> &[f64] {
        let n = self.tickers.len();
        &self.prices[date_idx * n..(date_idx + 1) * n]
    }

    /// Tickers dropped by the missing-history policy, with reasons.
    pub fn excluded(&self) -> &[Exclusion] {
        &self.excluded
    }

    /// Row-level ingestion diagnostics (rejected rows, etc).
    pub fn diagnostics(&self) -> &[String] {
        &self.diagnostics
    }

    fn with_diagnostics(mut self, diagnostics: Vec<String>) -> Self {
        self.diagnostics = diagnostics;
        self
    }
}

/// Training/test window boundaries. Invariant:
/// `train_start <= train_end < test_start <= test_end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSpec {
    pub train_start: NaiveDate,
    pub train_end: NaiveDate,
    pub test_start: NaiveDate,
    pub test_end: NaiveDate,
}

impl WindowSpec {
    pub fn new(
        train_start: NaiveDate,
        train_end: NaiveDate,
        test_start: NaiveDate,
        test_end: NaiveDate,
    ) -> Result<Self> {
        if !(train_start <= train_end && train_end < test_start && test_start <= test_end) {
            return Err(Error::Config(format!(
                "window must satisfy train_start <= train_end < test_start <= test_end, \
                 got {train_start} / {train_end} / {test_start} / {test_end}"
            )));
        }
        Ok(WindowSpec {
            train_start,
            train_end,
            test_start,
            test_end,
        })
    }
}

/// Raw per-ticker observations, not yet aligned. Rows need not be sorted.
#[derive(Debug, Clone)]
pub struct RawSeries {
    pub ticker: String,
    pub rows: Vec<(NaiveDate, f64)>,
}

/// Missing-history policy applied during alignment.
///
/// `coverage_window` is the date range over which coverage is measured
/// (normally the training window); `None` measures over the whole union
/// calendar. A ticker is retained only if the calendar dates at or after
/// its first observation make up at least `coverage_threshold` of the
/// window's calendar dates.
#[derive(Debug, Clone, Copy)]
pub struct MissingDataPolicy {
    pub coverage_threshold: f64,
    pub coverage_window: Option<(NaiveDate, NaiveDate)>,
}

impl Default for MissingDataPolicy {
    fn default() -> Self {
        MissingDataPolicy {
            coverage_threshold: DEFAULT_COVERAGE_THRESHOLD,
            coverage_window: None,
        }
    }
}

/// Ingestion configuration for [`load_csv_dir`].
#[derive(Debug, Clone)]
pub struct IngestionConfig {
    pub data_dir: PathBuf,
    /// Ordered ticker list. Empty means discover `*.csv` files in the
    /// data directory, sorted by file name.
    pub tickers: Vec<String>,
    /// strptime-style date pattern, ISO-8601 by default.
    pub date_format: String,
    pub coverage_threshold: f64,
    pub window: WindowSpec,
}

impl IngestionConfig {
    pub fn new(data_dir: PathBuf, window: WindowSpec) -> Self {
        IngestionConfig {
            data_dir,
            tickers: Vec::new(),
            date_format: DEFAULT_DATE_FORMAT.to_string(),
            coverage_threshold: DEFAULT_COVERAGE_THRESHOLD,
            window,
        }
    }

    fn policy(&self) -> MissingDataPolicy {
        MissingDataPolicy {
            coverage_threshold: self.coverage_threshold,
            coverage_window: Some((self.window.train_start, self.window.train_end)),
        }
    }
}

/// Load a directory of close-price CSVs and align them.
///
/// Accepts one `date,close` CSV per ticker (file stem = ticker) and/or
/// long-format `date,ticker,close` files. Rows outside
/// `[train_start, test_end]` are ignored; rows with unparseable dates or
/// non-positive prices are rejected with a diagnostic. A duplicate
/// (date, ticker) observation is a hard error.
pub fn load_csv_dir(dir: &Path, cfg: &IngestionConfig) -> Result<PriceTable> {
    if !dir.is_dir() {
        return Err(Error::Io {
            path: dir.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such directory"),
        });
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().map_or(false, |ext| ext == "csv"))
        .collect();
    files.sort();

    let mut diagnostics = Vec::new();
    let mut by_ticker: BTreeMap<String, Vec<(NaiveDate, f64)>> = BTreeMap::new();
    for path in &files {
        parse_csv_file(path, cfg, &mut by_ticker, &mut diagnostics)?;
    }

    // Order tickers by the config list when given, otherwise by name.
    let mut raw = Vec::new();
    let mut excluded_upfront = Vec::new();
    if cfg.tickers.is_empty() {
        for (ticker, rows) in by_ticker {
            raw.push(RawSeries { ticker, rows });
        }
    } else {
        for ticker in &cfg.tickers {
            match by_ticker.remove(ticker) {
                Some(rows) => raw.push(RawSeries {
                    ticker: ticker.clone(),
                    rows,
                }),
                None => excluded_upfront.push(Exclusion {
                    ticker: ticker.clone(),
                    reason: "no data".to_string(),
                }),
            }
        }
    }
    if raw.is_empty() {
        return Err(Error::EmptyData(format!(
            "no usable price rows under {}",
            dir.display()
        )));
    }

    let mut table = align(raw, &cfg.policy())?;
    table.excluded.extend(excluded_upfront);
    Ok(table.with_diagnostics(diagnostics))
}

fn parse_csv_file(
    path: &Path,
    cfg: &IngestionConfig,
    by_ticker: &mut BTreeMap<String, Vec<(NaiveDate, f64)>>,
    diagnostics: &mut Vec<String>,
) -> Result<()> {
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            source: e,
        })?;

    let headers = reader
        .headers()
        .map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            source: e,
        })?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
    };
    let (date_col, close_col) = match (col("date"), col("close")) {
        (Some(d), Some(c)) => (d, c),
        _ => {
            return Err(Error::InvalidInput(format!(
                "{file_name}: header must contain 'date' and 'close' columns, got {:?}",
                headers.iter().collect::<Vec<_>>()
            )))
        }
    };
    // Long format carries the ticker per row; per-ticker files take it
    // from the file stem.
    let ticker_col = col("ticker");
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();

    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            source: e,
        })?;
        let row_no = line + 2; // 1-based, after the header
        let date_str = record.get(date_col).unwrap_or("");
        let date = match NaiveDate::parse_from_str(date_str, &cfg.date_format) {
            Ok(d) => d,
            Err(_) => {
                diagnostics.push(format!(
                    "{file_name} row {row_no}: unparseable date '{date_str}' (skipped)"
                ));
                continue;
            }
        };
        if date < cfg.window.train_start || date > cfg.window.test_end {
            continue;
        }
        let ticker = match ticker_col {
            Some(tc) => record.get(tc).unwrap_or("").to_string(),
            None => stem.clone(),
        };
        if ticker.is_empty() {
            diagnostics.push(format!("{file_name} row {row_no}: empty ticker (skipped)"));
            continue;
        }
        let close_str = record.get(close_col).unwrap_or("");
        let close: f64 = match close_str.parse() {
            Ok(v) => v,
            Err(_) => {
                diagnostics.push(format!(
                    "{file_name} row {row_no}: unparseable close '{close_str}' (skipped)"
                ));
                continue;
            }
        };
        if !(close > 0.0) || !close.is_finite() {
            diagnostics.push(format!(
                "{file_name} row {row_no}: non-positive close {close} on {date} (skipped)"
            ));
            continue;
        }
        let rows = by_ticker.entry(ticker.clone()).or_default();
        if rows.iter().any(|(d, _)| *d == date) {
            return Err(Error::DuplicateObservation {
                ticker,
                date: date.to_string(),
            });
        }
        rows.push((date, close));
    }
    Ok(())
}

/// Align raw per-ticker series onto a common calendar.
///
/// The calendar is the union of observation dates across retained
/// tickers, trimmed to start at the latest first-observation date among
/// them; interior gaps are forward-filled from the previous close.
pub fn align(raw: Vec<RawSeries>, policy: &MissingDataPolicy) -> Result<PriceTable> {
    let mut excluded = Vec::new();
    let mut series: Vec<(String, BTreeMap<NaiveDate, f64>)> = Vec::new();
    for rs in raw {
        let mut map = BTreeMap::new();
        for (date, price) in rs.rows {
            if map.insert(date, price).is_some() {
                return Err(Error::DuplicateObservation {
                    ticker: rs.ticker,
                    date: date.to_string(),
                });
            }
        }
        if map.is_empty() {
            excluded.push(Exclusion {
                ticker: rs.ticker,
                reason: "no data".to_string(),
            });
        } else {
            series.push((rs.ticker, map));
        }
    }
    if series.is_empty() {
        return Err(Error::EmptyData(
            "no tickers with any observations".to_string(),
        ));
    }

    // Union of all observation dates, used both for coverage measurement
    // and as the basis of the final calendar.
    let mut union: Vec<NaiveDate> = series
        .iter()
        .flat_map(|(_, map)| map.keys().copied())
        .collect();
    union.sort_unstable();
    union.dedup();

    let (win_start, win_end) = policy
        .coverage_window
        .unwrap_or((union[0], *union.last().unwrap()));
    let window_dates: Vec<NaiveDate> = union
        .iter()
        .copied()
        .filter(|d| *d >= win_start && *d <= win_end)
        .collect();

    let mut retained: Vec<(String, BTreeMap<NaiveDate, f64>)> = Vec::new();
    for (ticker, map) in series {
        let first = *map.keys().next().unwrap();
        let coverage = if window_dates.is_empty() {
            1.0
        } else {
            let covered = window_dates.iter().filter(|d| **d >= first).count();
            covered as f64 / window_dates.len() as f64
        };
        if coverage + 1e-12 < policy.coverage_threshold {
            excluded.push(Exclusion {
                ticker,
                reason: format!(
                    "insufficient history: covers {:.1}% of window dates (first observation {first})",
                    coverage * 100.0
                ),
            });
        } else {
            retained.push((ticker, map));
        }
    }
    if retained.is_empty() {
        return Err(Error::EmptyData(format!(
            "all tickers dropped by the {:.0}% coverage policy",
            policy.coverage_threshold * 100.0
        )));
    }

    // Leading gaps are never filled: start the calendar at the latest
    // first observation among retained tickers.
    let start = retained
        .iter()
        .map(|(_, m)| *m.keys().next().unwrap())
        .max()
        .unwrap();
    let calendar_dates: Vec<NaiveDate> = union.into_iter().filter(|d| *d >= start).collect();

    let n = retained.len();
    let mut prices = vec![0.0; calendar_dates.len() * n];
    for (i, (_, map)) in retained.iter().enumerate() {
        for (t, date) in calendar_dates.iter().enumerate() {
            // Observation on the date, else forward-fill from the most
            // recent prior close (exists because date >= first obs).
            let price = map
                .range(..=date)
                .next_back()
                .map(|(_, p)| *p)
                .expect("calendar starts at or after every retained first observation");
            prices[t * n + i] = price;
        }
    }

    let tickers = retained.into_iter().map(|(t, _)| t).collect();
    PriceTable::new(TradingCalendar::new(calendar_dates)?, tickers, prices, excluded)
}

/// Split a table into training and test windows.
///
/// Dates are selected inclusively. The window may begin before the first
/// calendar date (common when the nominal start falls on a holiday), but
/// a `test_end` beyond the last available date is an error: silently
/// truncating the evaluation window would misstate results.
pub fn split(table: &PriceTable, spec: &WindowSpec) -> Result<(PriceTable, PriceTable)> {
    let last = table
        .calendar()
        .last()
        .ok_or_else(|| Error::EmptyData("empty price table".to_string()))?;
    if spec.test_end > last {
        return Err(Error::InvalidInput(format!(
            "test_end {} is beyond the table's last date {last}",
            spec.test_end
        )));
    }
    let train = slice_window(table, spec.train_start, spec.train_end, "train")?;
    let test = slice_window(table, spec.test_start, spec.test_end, "test")?;
    Ok((train, test))
}

fn slice_window(
    table: &PriceTable,
    start: NaiveDate,
    end: NaiveDate,
    label: &str,
) -> Result<PriceTable> {
    let (lo, hi) = table.calendar().range(start, end);
    if lo >= hi {
        return Err(Error::EmptyData(format!(
            "{label} window [{start}, {end}] selects no calendar dates"
        )));
    }
    let dates = table.calendar().dates()[lo..hi].to_vec();
    let n = table.n_tickers();
    let mut prices = Vec::with_capacity((hi - lo) * n);
    for t in lo..hi {
        prices.extend_from_slice(table.row(t));
    }
    PriceTable::new(
        TradingCalendar::new(dates)?,
        table.tickers().to_vec(),
        prices,
        table.excluded().to_vec(),
    )
}
