//! C ABI over the portopt core: opaque dataset handles, status codes,
//! and a thread-local last-error message. Callers pass row-major daily
//! return matrices and receive weight vectors and annualized statistics
//! through out-pointers; no ownership crosses the boundary except the
//! dataset handle, which must be released with [`portopt_dataset_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use chrono::{Days, NaiveDate};

use portopt::backtest::{evaluate, DailyReturnSeries};
use portopt::error::Error;
use portopt::frontier::{max_sharpe_portfolio, sample_portfolios};
use portopt::hrp::hrp_weights;
use portopt::marketdata::TradingCalendar;
use portopt::stats::{
    correlation, covariance, AnnualizationConvention, CorrelationMatrix, CovarianceMatrix,
    ReturnMatrix,
};

/// Result of every fallible call in this ABI.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PortoptStatus {
    /// Success.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// Arguments or data violated a precondition.
    InvalidInput = 2,
    /// A numerical failure: zero variance, zero volatility, or an
    /// ill-conditioned matrix.
    Numeric = 3,
    /// An I/O or serialization failure.
    Io = 4,
    /// An internal panic was caught at the boundary.
    Panic = 5,
}

/// Opaque handle over an ingested return matrix and its covariance and
/// correlation, computed once at construction.
pub struct PortoptDataset {
    rm: ReturnMatrix,
    cov: CovarianceMatrix,
    corr: CorrelationMatrix,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = Some(CString::new(sanitized).expect("nul bytes stripped"));
    });
}

fn status_of(e: &Error) -> PortoptStatus {
    match e {
        Error::Io { .. } | Error::Csv { .. } | Error::Json(_) => PortoptStatus::Io,
        Error::ZeroVariance { .. }
        | Error::ZeroVolatility(_)
        | Error::IllConditioned { .. }
        | Error::MalformedTree(_) => PortoptStatus::Numeric,
        Error::Stage { source, .. } => status_of(source),
        _ => PortoptStatus::InvalidInput,
    }
}

fn fail(status: PortoptStatus, message: String) -> PortoptStatus {
    set_last_error(message);
    status
}

fn fail_with(e: &Error) -> PortoptStatus {
    fail(status_of(e), e.to_string())
}

fn guarded(body: impl FnOnce() -> PortoptStatus) -> PortoptStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => fail(PortoptStatus::Panic, "internal panic".to_string()),
    }
}

/// Day-indexed calendar for callers that work in row indices, not dates.
fn synthetic_calendar(len: usize) -> TradingCalendar {
    let epoch = NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid epoch");
    let dates = (0..len)
        .map(|i| epoch + Days::new(i as u64))
        .collect();
    TradingCalendar::new(dates).expect("consecutive dates are increasing")
}

fn synthetic_tickers(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("A{i}")).collect()
}

/// Build a dataset from a row-major `n_rows x n_assets` matrix of daily
/// returns. On success writes a handle to `out`; free it with
/// [`portopt_dataset_free`].
///
/// # Safety
/// `returns` must point to `n_rows * n_assets` readable doubles and
/// `out` must be a valid pointer; the handle written to `out` is owned
/// by the caller.
#[no_mangle]
pub unsafe extern "C" fn portopt_dataset_from_returns(
    returns: *const f64,
    n_rows: usize,
    n_assets: usize,
    out: *mut *mut PortoptDataset,
) -> PortoptStatus {
    guarded(|| {
        if returns.is_null() || out.is_null() {
            return fail(PortoptStatus::NullArgument, "null pointer argument".into());
        }
        let Some(len) = n_rows.checked_mul(n_assets) else {
            return fail(PortoptStatus::InvalidInput, "matrix size overflows".into());
        };
        if n_rows < 2 || n_assets == 0 {
            return fail(
                PortoptStatus::InvalidInput,
                format!("need at least 2 rows and 1 asset, got {n_rows} x {n_assets}"),
            );
        }
        let values = std::slice::from_raw_parts(returns, len).to_vec();
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return fail(
                PortoptStatus::InvalidInput,
                format!("non-finite return {bad}"),
            );
        }
        let built = (|| -> portopt::Result<PortoptDataset> {
            let rm = ReturnMatrix::from_parts(
                synthetic_calendar(n_rows),
                synthetic_tickers(n_assets),
                values,
            )?;
            let cov = covariance(&rm)?;
            let corr = correlation(&cov)?;
            Ok(PortoptDataset { rm, cov, corr })
        })();
        match built {
            Ok(ds) => {
                *out = Box::into_raw(Box::new(ds));
                PortoptStatus::Ok
            }
            Err(e) => fail_with(&e),
        }
    })
}

/// Release a dataset handle. Null is a no-op.
///
/// # Safety
/// `ds` must be a handle returned by [`portopt_dataset_from_returns`]
/// that has not already been freed.
#[no_mangle]
pub unsafe extern "C" fn portopt_dataset_free(ds: *mut PortoptDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Number of assets in the dataset; 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn portopt_dataset_n_assets(ds: *const PortoptDataset) -> usize {
    if ds.is_null() {
        0
    } else {
        (*ds).rm.n_tickers()
    }
}

/// Hierarchical-risk-parity weights for the dataset's assets, written
/// to `out_weights` in asset order.
///
/// # Safety
/// `ds` must be a live dataset handle and `out_weights` must point to
/// `portopt_dataset_n_assets(ds)` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn portopt_hrp_weights(
    ds: *const PortoptDataset,
    out_weights: *mut f64,
) -> PortoptStatus {
    guarded(|| {
        if ds.is_null() || out_weights.is_null() {
            return fail(PortoptStatus::NullArgument, "null pointer argument".into());
        }
        let ds = &*ds;
        match hrp_weights(&ds.cov, &ds.corr) {
            Ok(out) => {
                let dst = std::slice::from_raw_parts_mut(out_weights, ds.rm.n_tickers());
                dst.copy_from_slice(out.weights.weights());
                PortoptStatus::Ok
            }
            Err(e) => fail_with(&e),
        }
    })
}

/// Max-Sharpe portfolio from `iterations` Monte-Carlo simplex draws.
/// Writes the weights plus the annualized return, volatility, and
/// Sharpe ratio of the selected portfolio. Deterministic in `seed`.
///
/// # Safety
/// `ds` must be a live dataset handle; `out_weights` must point to
/// `portopt_dataset_n_assets(ds)` writable doubles; the three scalar
/// out-pointers must each be valid or null (null skips that output).
#[no_mangle]
pub unsafe extern "C" fn portopt_max_sharpe_weights(
    ds: *const PortoptDataset,
    iterations: u64,
    rf: f64,
    seed: u64,
    trading_days: u32,
    out_weights: *mut f64,
    out_annual_return: *mut f64,
    out_annual_vol: *mut f64,
    out_sharpe: *mut f64,
) -> PortoptStatus {
    guarded(|| {
        if ds.is_null() || out_weights.is_null() {
            return fail(PortoptStatus::NullArgument, "null pointer argument".into());
        }
        let ds = &*ds;
        let picked = (|| -> portopt::Result<()> {
            let conv = AnnualizationConvention::new(trading_days)?;
            let cloud =
                sample_portfolios(&ds.rm, &ds.cov, iterations as usize, rf, seed, &conv)?;
            let best = max_sharpe_portfolio(&cloud);
            let dst = std::slice::from_raw_parts_mut(out_weights, ds.rm.n_tickers());
            dst.copy_from_slice(best.weights.weights());
            if !out_annual_return.is_null() {
                *out_annual_return = best.annual_return;
            }
            if !out_annual_vol.is_null() {
                *out_annual_vol = best.annual_vol;
            }
            if !out_sharpe.is_null() {
                *out_sharpe = best.sharpe;
            }
            Ok(())
        })();
        match picked {
            Ok(()) => PortoptStatus::Ok,
            Err(e) => fail_with(&e),
        }
    })
}

/// Annualize a daily portfolio return series: arithmetic mean return,
/// sample volatility with the T-1 denominator, and the Sharpe ratio
/// against `rf`.
///
/// # Safety
/// `daily_returns` must point to `len` readable doubles; the three
/// scalar out-pointers must each be valid or null (null skips that
/// output).
#[no_mangle]
pub unsafe extern "C" fn portopt_evaluate(
    daily_returns: *const f64,
    len: usize,
    trading_days: u32,
    rf: f64,
    out_annual_return: *mut f64,
    out_annual_vol: *mut f64,
    out_sharpe: *mut f64,
) -> PortoptStatus {
    guarded(|| {
        if daily_returns.is_null() {
            return fail(PortoptStatus::NullArgument, "null pointer argument".into());
        }
        let values = std::slice::from_raw_parts(daily_returns, len).to_vec();
        let report = (|| -> portopt::Result<portopt::backtest::PerformanceReport> {
            let series = DailyReturnSeries::new(synthetic_calendar(len), values)?;
            let conv = AnnualizationConvention::new(trading_days)?;
            evaluate(&series, &conv, rf, "portfolio", "window")
        })();
        match report {
            Ok(r) => {
                if !out_annual_return.is_null() {
                    *out_annual_return = r.annual_return;
                }
                if !out_annual_vol.is_null() {
                    *out_annual_vol = r.annual_vol;
                }
                if !out_sharpe.is_null() {
                    *out_sharpe = r.sharpe;
                }
                PortoptStatus::Ok
            }
            Err(e) => fail_with(&e),
        }
    })
}

/// Message for the most recent failing call on this thread, or null if
/// none has failed. The pointer stays valid until the next failing call
/// on the same thread.
#[no_mangle]
pub extern "C" fn portopt_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(std::ptr::null(), |msg| msg.as_ptr())
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn portopt_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr() as *const c_char
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CStr;

    /// Row-major 3-asset return fixture with distinct variances.
    fn fixture_returns(rows: usize) -> Vec<f64> {
        (0..rows)
            .flat_map(|i| {
                let x = (i as f64 * 0.37).sin();
                let y = (i as f64 * 0.71).cos();
                [0.01 * x, 0.02 * y, 0.005 * x - 0.008 * y + 0.001]
            })
            .collect()
    }

    unsafe fn make_dataset(rows: usize, assets: usize, data: &[f64]) -> *mut PortoptDataset {
        let mut handle: *mut PortoptDataset = std::ptr::null_mut();
        let status = portopt_dataset_from_returns(data.as_ptr(), rows, assets, &mut handle);
        assert_eq!(status, PortoptStatus::Ok);
        assert!(!handle.is_null());
        handle
    }

    #[test]
    fn dataset_round_trip_and_hrp_matches_core() {
        let data = fixture_returns(40);
        unsafe {
            let ds = make_dataset(40, 3, &data);
            assert_eq!(portopt_dataset_n_assets(ds), 3);

            let mut weights = [0.0; 3];
            assert_eq!(
                portopt_hrp_weights(ds, weights.as_mut_ptr()),
                PortoptStatus::Ok
            );
            let sum: f64 = weights.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);

            // Same computation straight through the core crate.
            let rm = ReturnMatrix::from_parts(
                synthetic_calendar(40),
                synthetic_tickers(3),
                data.clone(),
            )
            .unwrap();
            let cov = covariance(&rm).unwrap();
            let corr = correlation(&cov).unwrap();
            let direct = hrp_weights(&cov, &corr).unwrap();
            for (a, b) in weights.iter().zip(direct.weights.weights()) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
            portopt_dataset_free(ds);
        }
    }

    #[test]
    fn null_arguments_are_reported() {
        unsafe {
            let mut handle: *mut PortoptDataset = std::ptr::null_mut();
            let status =
                portopt_dataset_from_returns(std::ptr::null(), 10, 2, &mut handle);
            assert_eq!(status, PortoptStatus::NullArgument);
            let msg = portopt_last_error_message();
            assert!(!msg.is_null());
            let text = CStr::from_ptr(msg).to_str().unwrap();
            assert!(text.contains("null"), "unexpected message {text:?}");

            portopt_dataset_free(std::ptr::null_mut()); // no-op
        }
    }

    #[test]
    fn invalid_shapes_are_rejected() {
        let data = fixture_returns(1);
        unsafe {
            let mut handle: *mut PortoptDataset = std::ptr::null_mut();
            assert_eq!(
                portopt_dataset_from_returns(data.as_ptr(), 1, 3, &mut handle),
                PortoptStatus::InvalidInput
            );
            assert_eq!(
                portopt_dataset_from_returns(data.as_ptr(), 3, 0, &mut handle),
                PortoptStatus::InvalidInput
            );
        }
    }

    #[test]
    fn zero_variance_asset_is_numeric_error() {
        // Second column constant.
        let data: Vec<f64> = (0..20)
            .flat_map(|i| [0.01 * ((i as f64) * 0.9).sin(), 0.0])
            .collect();
        unsafe {
            let mut handle: *mut PortoptDataset = std::ptr::null_mut();
            let status = portopt_dataset_from_returns(data.as_ptr(), 20, 2, &mut handle);
            assert_eq!(status, PortoptStatus::Numeric);
            assert!(handle.is_null());
        }
    }

    #[test]
    fn max_sharpe_is_deterministic_and_consistent() {
        let data = fixture_returns(60);
        unsafe {
            let ds = make_dataset(60, 3, &data);
            let run = |seed: u64| {
                let mut w = [0.0; 3];
                let (mut ret, mut vol, mut sharpe) = (0.0, 0.0, 0.0);
                let status = portopt_max_sharpe_weights(
                    ds,
                    2000,
                    0.01,
                    seed,
                    250,
                    w.as_mut_ptr(),
                    &mut ret,
                    &mut vol,
                    &mut sharpe,
                );
                assert_eq!(status, PortoptStatus::Ok);
                (w, ret, vol, sharpe)
            };
            let (w1, r1, v1, s1) = run(7);
            let (w2, r2, v2, s2) = run(7);
            assert_eq!(w1, w2);
            assert_eq!(r1.to_bits(), r2.to_bits());
            assert_eq!(v1.to_bits(), v2.to_bits());
            assert!((s1 - (r1 - 0.01) / v1).abs() < 1e-9);
            assert_eq!(s1.to_bits(), s2.to_bits());

            let (w3, ..) = run(8);
            assert_ne!(w1, w3, "different seed should pick a different sample");
            portopt_dataset_free(ds);
        }
    }

    #[test]
    fn evaluate_matches_direct_statistics() {
        let series: Vec<f64> = (0..50).map(|i| 0.01 * ((i as f64) * 0.53).sin()).collect();
        unsafe {
            let (mut ret, mut vol, mut sharpe) = (0.0, 0.0, 0.0);
            let status = portopt_evaluate(
                series.as_ptr(),
                series.len(),
                250,
                0.01,
                &mut ret,
                &mut vol,
                &mut sharpe,
            );
            assert_eq!(status, PortoptStatus::Ok);
            let mean = series.iter().sum::<f64>() / series.len() as f64;
            let std = portopt::stats::sample_std(&series).unwrap();
            assert!((ret - mean * 250.0).abs() < 1e-12);
            assert!((vol - std * 250f64.sqrt()).abs() < 1e-12);
            assert!((sharpe - (ret - 0.01) / vol).abs() < 1e-12);
        }
    }

    #[test]
    fn evaluate_zero_volatility_is_numeric() {
        let series = vec![0.001; 30];
        unsafe {
            let status = portopt_evaluate(
                series.as_ptr(),
                series.len(),
                250,
                0.0,
                std::ptr::null_mut(),
                std::ptr::null_mut(),
                std::ptr::null_mut(),
            );
            assert_eq!(status, PortoptStatus::Numeric);
        }
    }

    #[test]
    fn version_is_a_c_string() {
        unsafe {
            let v = CStr::from_ptr(portopt_version()).to_str().unwrap();
            assert_eq!(v, env!("CARGO_PKG_VERSION"));
        }
    }
}
