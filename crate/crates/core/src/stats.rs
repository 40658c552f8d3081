//! Return, volatility, covariance, correlation and Sharpe-ratio
//! computations shared by the allocators and the backtester.
//!
//! Conventions: simple daily returns (`p[t+1]/p[t] - 1`), sample
//! covariance with the `T-1` denominator, and annualization by
//! `sqrt(trading_days_per_year)` for volatilities and by
//! `trading_days_per_year` for mean daily returns.

use crate::error::{Error, Result};
use crate::marketdata::{PriceTable, TradingCalendar};

/// Trading-day count used to annualize daily statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnnualizationConvention {
    pub trading_days_per_year: u32,
}

impl Default for AnnualizationConvention {
    fn default() -> Self {
        AnnualizationConvention {
            trading_days_per_year: 250,
        }
    }
}

impl AnnualizationConvention {
    pub fn new(trading_days_per_year: u32) -> Result<Self> {
        if trading_days_per_year == 0 {
            return Err(Error::Config(
                "trading_days_per_year must be positive".to_string(),
            ));
        }
        Ok(AnnualizationConvention {
            trading_days_per_year,
        })
    }

    pub fn days(&self) -> f64 {
        f64::from(self.trading_days_per_year)
    }
}

/// Dense `[date x ticker]` matrix of daily simple returns. Has one fewer
/// date than the price table it was derived from; returns are dated by
/// the later of the two days in each ratio.
#[derive(Debug, Clone)]
pub struct ReturnMatrix {
    calendar: TradingCalendar,
    tickers: Vec<String>,
    returns: Vec<f64>,
}

impl ReturnMatrix {
    pub fn calendar(&self) -> &TradingCalendar {
        &self.calendar
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn n_rows(&self) -> usize {
        self.calendar.len()
    }

    pub fn n_tickers(&self) -> usize {
        self.tickers.len()
    }

    pub fn value(&self, row: usize, ticker_idx: usize) -> f64 {
        self.returns[row * self.tickers.len() + ticker_idx]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let n = self.tickers.len();
        &self.returns[row * n..(row + 1) * n]
    }

    /// Mean daily return per ticker.
    pub fn column_means(&self) -> Vec<f64> {
        let n = self.n_tickers();
        let t = self.n_rows();
        let mut means = vec![0.0; n];
        for row in 0..t {
            for (m, r) in means.iter_mut().zip(self.row(row)) {
                *m += r;
            }
        }
        for m in &mut means {
            *m /= t as f64;
        }
        means
    }

    /// Test-support constructor; validates shape only.
    pub fn from_parts(
        calendar: TradingCalendar,
        tickers: Vec<String>,
        returns: Vec<f64>,
    ) -> Result<Self> {
        if returns.len() != calendar.len() * tickers.len() {
            return Err(Error::InvalidInput(format!(
                "return matrix has {} entries, expected {} rows x {} tickers",
                returns.len(),
                calendar.len(),
                tickers.len()
            )));
        }
        Ok(ReturnMatrix {
            calendar,
            tickers,
            returns,
        })
    }
}

/// Symmetric matrix of daily return covariances, `n x n` row-major.
#[derive(Debug, Clone)]
pub struct CovarianceMatrix {
    tickers: Vec<String>,
    values: Vec<f64>,
}

impl CovarianceMatrix {
    pub fn from_parts(tickers: Vec<String>, values: Vec<f64>) -> Result<Self> {
        let n = tickers.len();
        if values.len() != n * n {
            return Err(Error::InvalidInput(format!(
                "covariance matrix has {} entries for {} tickers",
                values.len(),
                n
            )));
        }
        for i in 0..n {
            if values[i * n + i] < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "negative variance for {}",
                    tickers[i]
                )));
            }
            for j in 0..i {
                if (values[i * n + j] - values[j * n + i]).abs() > 1e-12 {
                    return Err(Error::InvalidInput(format!(
                        "covariance not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(CovarianceMatrix { tickers, values })
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn n(&self) -> usize {
        self.tickers.len()
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.tickers.len() + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Portfolio daily variance `w' S w`.
    pub fn quadratic_form(&self, w: &[f64]) -> f64 {
        let n = self.n();
        debug_assert_eq!(w.len(), n);
        let mut acc = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += self.at(i, j) * w[j];
            }
            acc += w[i] * row;
        }
        acc
    }
}

/// Correlation matrix with unit diagonal and entries clamped to [-1, 1].
#[derive(Debug, Clone)]
pub struct CorrelationMatrix {
    tickers: Vec<String>,
    values: Vec<f64>,
}

impl CorrelationMatrix {
    pub fn from_parts(tickers: Vec<String>, values: Vec<f64>) -> Result<Self> {
        let n = tickers.len();
        if values.len() != n * n {
            return Err(Error::InvalidInput(format!(
                "correlation matrix has {} entries for {} tickers",
                values.len(),
                n
            )));
        }
        for i in 0..n {
            if values[i * n + i] != 1.0 {
                return Err(Error::InvalidInput(format!(
                    "correlation diagonal must be exactly 1, got {} at {i}",
                    values[i * n + i]
                )));
            }
            for j in 0..n {
                let v = values[i * n + j];
                if !(-1.0..=1.0).contains(&v) {
                    return Err(Error::InvalidInput(format!(
                        "correlation entry {v} outside [-1, 1] at ({i},{j})"
                    )));
                }
                if j < i && (v - values[j * n + i]).abs() > 1e-12 {
                    return Err(Error::InvalidInput(format!(
                        "correlation not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(CorrelationMatrix { tickers, values })
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn n(&self) -> usize {
        self.tickers.len()
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.tickers.len() + j]
    }
}

/// Daily simple returns of every ticker: `r[t][i] = p[t+1][i]/p[t][i] - 1`.
pub fn daily_returns(table: &PriceTable) -> Result<ReturnMatrix> {
    if table.n_dates() < 2 {
        return Err(Error::InvalidInput(
            "daily returns need at least two dates".to_string(),
        ));
    }
    let n = table.n_tickers();
    let rows = table.n_dates() - 1;
    let mut returns = Vec::with_capacity(rows * n);
    for t in 0..rows {
        let prev = table.row(t);
        let next = table.row(t + 1);
        for i in 0..n {
            returns.push(next[i] / prev[i] - 1.0);
        }
    }
    let calendar = TradingCalendar::new(table.calendar().dates()[1..].to_vec())?;
    ReturnMatrix::from_parts(calendar, table.tickers().to_vec(), returns)
}

/// Scale a daily volatility to annual terms.
pub fn annualize_vol(daily_vol: f64, conv: &AnnualizationConvention) -> Result<f64> {
    if daily_vol < 0.0 {
        return Err(Error::InvalidInput(format!(
            "volatility must be non-negative, got {daily_vol}"
        )));
    }
    Ok(daily_vol * conv.days().sqrt())
}

/// Sample covariance of daily returns with the `T-1` denominator.
pub fn covariance(rm: &ReturnMatrix) -> Result<CovarianceMatrix> {
    let t = rm.n_rows();
    if t < 2 {
        return Err(Error::InvalidInput(
            "covariance needs at least two return rows".to_string(),
        ));
    }
    let n = rm.n_tickers();
    let means = rm.column_means();
    let mut values = vec![0.0; n * n];
    for row in 0..t {
        let r = rm.row(row);
        for i in 0..n {
            let di = r[i] - means[i];
            for j in i..n {
                values[i * n + j] += di * (r[j] - means[j]);
            }
        }
    }
    let denom = (t - 1) as f64;
    for i in 0..n {
        for j in i..n {
            let v = values[i * n + j] / denom;
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
    }
    CovarianceMatrix::from_parts(rm.tickers().to_vec(), values)
}

/// Correlation from covariance: `rho_ij = S_ij / sqrt(S_ii S_jj)`,
/// clamped into [-1, 1] to guard downstream square roots.
pub fn correlation(cov: &CovarianceMatrix) -> Result<CorrelationMatrix> {
    let n = cov.n();
    for i in 0..n {
        if cov.at(i, i) <= 0.0 {
            return Err(Error::ZeroVariance {
                ticker: cov.tickers()[i].clone(),
            });
        }
    }
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        values[i * n + i] = 1.0;
        for j in 0..i {
            let rho = cov.at(i, j) / (cov.at(i, i) * cov.at(j, j)).sqrt();
            let rho = rho.clamp(-1.0, 1.0);
            values[i * n + j] = rho;
            values[j * n + i] = rho;
        }
    }
    CorrelationMatrix::from_parts(cov.tickers().to_vec(), values)
}

/// Sharpe ratio: excess annual return over annual volatility.
pub fn sharpe_ratio(annual_return: f64, annual_vol: f64, risk_free_rate: f64) -> Result<f64> {
    if annual_vol <= 0.0 {
        return Err(Error::ZeroVolatility(format!(
            "annual volatility must be positive, got {annual_vol}"
        )));
    }
    Ok((annual_return - risk_free_rate) / annual_vol)
}

/// Sample standard deviation with the `T-1` denominator.
pub fn sample_std(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::InvalidInput(
            "standard deviation needs at least two observations".to_string(),
        ));
    }
    // A constant series has zero variance by definition; don't let mean
    // round-off leak a spurious epsilon.
    if values.windows(2).all(|w| w[0] == w[1]) {
        return Ok(0.0);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    Ok((ss / (values.len() - 1) as f64).sqrt())
}
