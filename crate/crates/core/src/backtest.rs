//! Backtesting: apply a fixed weight vector to a return window, compute
//! the daily portfolio return series with daily rebalancing, annualize,
//! and compare portfolios by Sharpe ratio per window. Weights are fixed
//! once (estimated on the training window) and reused unchanged on the
//! test window — no re-estimation, no turnover.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hrp::WeightVector;
use crate::marketdata::TradingCalendar;
use crate::stats::{self, AnnualizationConvention, ReturnMatrix};

/// Daily portfolio returns over one window.
#[derive(Debug, Clone)]
pub struct DailyReturnSeries {
    calendar: TradingCalendar,
    values: Vec<f64>,
}

impl DailyReturnSeries {
    pub fn new(calendar: TradingCalendar, values: Vec<f64>) -> Result<Self> {
        if calendar.len() != values.len() {
            return Err(Error::InvalidInput(format!(
                "{} return values for {} calendar dates",
                values.len(),
                calendar.len()
            )));
        }
        Ok(DailyReturnSeries { calendar, values })
    }

    pub fn calendar(&self) -> &TradingCalendar {
        &self.calendar
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Annualized performance of one portfolio on one window.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PerformanceReport {
    pub portfolio_label: String,
    pub window_label: String,
    pub annual_return: f64,
    pub annual_vol: f64,
    pub sharpe: f64,
    pub rf: f64,
}

/// Per-window winners for one sector, by strictly higher Sharpe ratio.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SectorComparison {
    pub sector: String,
    pub train_winner: String,
    pub test_winner: String,
}

/// How the annual return is derived from daily returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReturnAnnualization {
    /// mean(daily) x trading_days — the default throughout.
    #[default]
    Arithmetic,
    /// Compound the realized path to a yearly rate.
    Geometric,
}

/// Daily-rebalanced portfolio returns: `value[t] = sum_i w[i] * rm[t][i]`.
pub fn portfolio_daily_returns(rm: &ReturnMatrix, w: &WeightVector) -> Result<DailyReturnSeries> {
    if rm.tickers() != w.tickers() {
        return Err(Error::InvalidInput(
            "weight vector and return matrix ticker sets differ".to_string(),
        ));
    }
    let values: Vec<f64> = (0..rm.n_rows())
        .map(|t| {
            rm.row(t)
                .iter()
                .zip(w.weights())
                .map(|(r, wi)| wi * r)
                .sum()
        })
        .collect();
    DailyReturnSeries::new(rm.calendar().clone(), values)
}

/// Annualize a daily portfolio series into a report, arithmetic
/// annualization.
pub fn evaluate(
    series: &DailyReturnSeries,
    conv: &AnnualizationConvention,
    rf: f64,
    portfolio_label: &str,
    window_label: &str,
) -> Result<PerformanceReport> {
    evaluate_with(
        series,
        conv,
        rf,
        portfolio_label,
        window_label,
        ReturnAnnualization::Arithmetic,
    )
}

/// [`evaluate`] with an explicit return-annualization choice.
pub fn evaluate_with(
    series: &DailyReturnSeries,
    conv: &AnnualizationConvention,
    rf: f64,
    portfolio_label: &str,
    window_label: &str,
    method: ReturnAnnualization,
) -> Result<PerformanceReport> {
    if series.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "evaluation needs at least two daily returns, got {}",
            series.len()
        )));
    }
    let days = conv.days();
    let t = series.len() as f64;
    let annual_return = match method {
        ReturnAnnualization::Arithmetic => {
            series.values().iter().sum::<f64>() / t * days
        }
        ReturnAnnualization::Geometric => {
            let mut growth = 1.0;
            for &r in series.values() {
                let g = 1.0 + r;
                if g <= 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "daily return {r} wipes out the portfolio; cannot compound"
                    )));
                }
                growth *= g;
            }
            growth.powf(days / t) - 1.0
        }
    };
    let annual_vol = stats::annualize_vol(stats::sample_std(series.values())?, conv)?;
    let sharpe = stats::sharpe_ratio(annual_return, annual_vol, rf)?;
    Ok(PerformanceReport {
        portfolio_label: portfolio_label.to_string(),
        window_label: window_label.to_string(),
        annual_return,
        annual_vol,
        sharpe,
        rf,
    })
}

fn winner_between(a: &PerformanceReport, b: &PerformanceReport) -> String {
    if a.sharpe > b.sharpe {
        a.portfolio_label.clone()
    } else if b.sharpe > a.sharpe {
        b.portfolio_label.clone()
    } else {
        "tie".to_string()
    }
}

/// Reduce four reports (2 portfolios x train/test) to per-window winners.
/// Expects exactly one report per (portfolio_label, window_label) cell.
pub fn compare(reports: &[PerformanceReport], sector: &str) -> Result<SectorComparison> {
    let mut labels: Vec<&str> = Vec::new();
    for r in reports {
        if !labels.contains(&r.portfolio_label.as_str()) {
            labels.push(&r.portfolio_label);
        }
    }
    if labels.len() != 2 {
        return Err(Error::InvalidInput(format!(
            "comparison needs exactly two portfolio labels, got {:?}",
            labels
        )));
    }
    let cell = |label: &str, window: &str| -> Result<&PerformanceReport> {
        let mut found = None;
        for r in reports {
            if r.portfolio_label == label && r.window_label == window {
                if found.is_some() {
                    return Err(Error::InvalidInput(format!(
                        "duplicate report for ({label}, {window})"
                    )));
                }
                found = Some(r);
            }
        }
        found.ok_or_else(|| Error::InvalidInput(format!("missing report for ({label}, {window})")))
    };
    let train_winner = winner_between(cell(labels[0], "train")?, cell(labels[1], "train")?);
    let test_winner = winner_between(cell(labels[0], "test")?, cell(labels[1], "test")?);
    Ok(SectorComparison {
        sector: sector.to_string(),
        train_winner,
        test_winner,
    })
}

/// Fixed-width text table of one sector's four reports, grouped by
/// window, one row per portfolio with return, volatility, and Sharpe
/// ratio.
pub fn report_table(sector: &str, reports: &[PerformanceReport]) -> String {
    let mut out = String::new();
    out.push_str(&format!("sector: {sector}\n"));
    out.push_str(&format!(
        "{:<8}{:<12}{:>14}{:>12}{:>10}\n",
        "window", "portfolio", "annual_return", "annual_vol", "sharpe"
    ));
    for window in ["train", "test"] {
        for r in reports.iter().filter(|r| r.window_label == window) {
            out.push_str(&format!(
                "{:<8}{:<12}{:>14.4}{:>12.4}{:>10.4}\n",
                r.window_label, r.portfolio_label, r.annual_return, r.annual_vol, r.sharpe
            ));
        }
    }
    out
}

/// Fixed-width summary table of per-sector winners (sector, train
/// winner, test winner), one row per comparison, in input order.
pub fn comparison_table(comparisons: &[SectorComparison]) -> String {
    let width = comparisons
        .iter()
        .map(|c| c.sector.len())
        .chain(std::iter::once("sector".len()))
        .max()
        .unwrap_or(6)
        + 2;
    let mut out = String::new();
    out.push_str(&format!(
        "{:<width$}{:<8}{:<8}\n",
        "sector", "train", "test"
    ));
    for c in comparisons {
        out.push_str(&format!(
            "{:<width$}{:<8}{:<8}\n",
            c.sector, c.train_winner, c.test_winner
        ));
    }
    out
}

/// Serialize reports as a pretty JSON array (stable field order).
pub fn report_json(reports: &[PerformanceReport]) -> Result<String> {
    Ok(serde_json::to_string_pretty(reports)?)
}

pub fn parse_report_json(content: &str) -> Result<Vec<PerformanceReport>> {
    Ok(serde_json::from_str(content)?)
}

#[derive(Debug, Serialize, Deserialize)]
struct DailyRow {
    date: String,
    cla_return: f64,
    hrp_return: f64,
}

/// Render two aligned daily series as `date,cla_return,hrp_return` rows.
pub fn daily_returns_csv(cla: &DailyReturnSeries, hrp: &DailyReturnSeries) -> Result<String> {
    if cla.calendar().dates() != hrp.calendar().dates() {
        return Err(Error::InvalidInput(
            "daily return series calendars differ".to_string(),
        ));
    }
    let mut writer = csv::Writer::from_writer(Vec::new());
    for ((date, c), h) in cla
        .calendar()
        .dates()
        .iter()
        .zip(cla.values())
        .zip(hrp.values())
    {
        writer
            .serialize(DailyRow {
                date: date.format("%Y-%m-%d").to_string(),
                cla_return: *c,
                hrp_return: *h,
            })
            .map_err(|e| Error::InvalidInput(format!("daily returns csv: {e}")))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::InvalidInput(format!("csv flush: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Parse `date,cla_return,hrp_return` rows in file order.
pub fn parse_daily_returns_csv(content: &str) -> Result<Vec<(chrono::NaiveDate, f64, f64)>> {
    let mut reader = csv::Reader::from_reader(content.as_bytes());
    let mut rows = Vec::new();
    for record in reader.deserialize::<DailyRow>() {
        let row = record.map_err(|e| Error::InvalidInput(format!("daily returns csv: {e}")))?;
        let date = chrono::NaiveDate::parse_from_str(&row.date, "%Y-%m-%d")
            .map_err(|e| Error::InvalidInput(format!("daily returns csv date {}: {e}", row.date)))?;
        rows.push((date, row.cla_return, row.hrp_return));
    }
    Ok(rows)
}

/// Render parsed daily rows; `parse` then this is a fixed point.
pub fn daily_return_rows_csv(rows: &[(chrono::NaiveDate, f64, f64)]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for (date, c, h) in rows {
        writer
            .serialize(DailyRow {
                date: date.format("%Y-%m-%d").to_string(),
                cla_return: *c,
                hrp_return: *h,
            })
            .map_err(|e| Error::InvalidInput(format!("daily returns csv: {e}")))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::InvalidInput(format!("csv flush: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
