//! Portfolio construction and backtesting toolkit.
//!
//! Pipeline: ingest close-price CSVs onto a shared trading calendar
//! ([`marketdata`]), derive returns and covariance/correlation matrices
//! ([`stats`]), allocate with hierarchical risk parity ([`hrp`]) and a
//! Monte-Carlo max-Sharpe frontier search ([`frontier`]), then evaluate
//! both portfolios out-of-sample ([`backtest`]). The [`cli`] module
//! drives the whole thing from TOML sector configs.

pub mod backtest;
pub mod cli;
pub mod error;
pub mod frontier;
pub mod hrp;
pub mod marketdata;
pub mod stats;

pub use error::{Error, Result};
