#ifndef PORTOPT_H
#define PORTOPT_H

/* Generated by cbindgen from the portopt-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call in this ABI.
typedef enum PortoptStatus {
  // Success.
  PORTOPT_STATUS_OK = 0,
  // A required pointer argument was null.
  PORTOPT_STATUS_NULL_ARGUMENT = 1,
  // Arguments or data violated a precondition.
  PORTOPT_STATUS_INVALID_INPUT = 2,
  // A numerical failure: zero variance, zero volatility, or an
  // ill-conditioned matrix.
  PORTOPT_STATUS_NUMERIC = 3,
  // An I/O or serialization failure.
  PORTOPT_STATUS_IO = 4,
  // An internal panic was caught at the boundary.
  PORTOPT_STATUS_PANIC = 5,
} PortoptStatus;

// Opaque handle over an ingested return matrix and its covariance and
// correlation, computed once at construction.
typedef struct PortoptDataset PortoptDataset;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Build a dataset from a row-major `n_rows x n_assets` matrix of daily
// returns. On success writes a handle to `out`; free it with
// [`portopt_dataset_free`].
//
// # Safety
// `returns` must point to `n_rows * n_assets` readable doubles and
// `out` must be a valid pointer; the handle written to `out` is owned
// by the caller.
enum PortoptStatus portopt_dataset_from_returns(const double *returns,
                                                size_t n_rows,
                                                size_t n_assets,
                                                struct PortoptDataset **out);

// Release a dataset handle. Null is a no-op.
//
// # Safety
// `ds` must be a handle returned by [`portopt_dataset_from_returns`]
// that has not already been freed.
void portopt_dataset_free(struct PortoptDataset *ds);

// Number of assets in the dataset; 0 for a null handle.
//
// # Safety
// `ds` must be null or a live dataset handle.
size_t portopt_dataset_n_assets(const struct PortoptDataset *ds);

// Hierarchical-risk-parity weights for the dataset's assets, written
// to `out_weights` in asset order.
//
// # Safety
// `ds` must be a live dataset handle and `out_weights` must point to
// `portopt_dataset_n_assets(ds)` writable doubles.
enum PortoptStatus portopt_hrp_weights(const struct PortoptDataset *ds, double *out_weights);

// Max-Sharpe portfolio from `iterations` Monte-Carlo simplex draws.
// Writes the weights plus the annualized return, volatility, and
// Sharpe ratio of the selected portfolio. Deterministic in `seed`.
//
// # Safety
// `ds` must be a live dataset handle; `out_weights` must point to
// `portopt_dataset_n_assets(ds)` writable doubles; the three scalar
// out-pointers must each be valid or null (null skips that output).
enum PortoptStatus portopt_max_sharpe_weights(const struct PortoptDataset *ds,
                                              uint64_t iterations,
                                              double rf,
                                              uint64_t seed,
                                              uint32_t trading_days,
                                              double *out_weights,
                                              double *out_annual_return,
                                              double *out_annual_vol,
                                              double *out_sharpe);

// Annualize a daily portfolio return series: arithmetic mean return,
// sample volatility with the T-1 denominator, and the Sharpe ratio
// against `rf`.
//
// # Safety
// `daily_returns` must point to `len` readable doubles; the three
// scalar out-pointers must each be valid or null (null skips that
// output).
enum PortoptStatus portopt_evaluate(const double *daily_returns,
                                    size_t len,
                                    uint32_t trading_days,
                                    double rf,
                                    double *out_annual_return,
                                    double *out_annual_vol,
                                    double *out_sharpe);

// Message for the most recent failing call on this thread, or null if
// none has failed. The pointer stays valid until the next failing call
// on the same thread.
const char *portopt_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *portopt_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PORTOPT_H */
