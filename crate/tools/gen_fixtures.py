#!/usr/bin/env python3
"""Regenerate the committed sector fixtures under fixtures/.

Synthetic daily close prices for eight NSE-style sectors on a weekday
calendar (2016-01-01 .. 2021-08-26), generated from a one-factor model
per sector. The factor and idiosyncratic shocks are de-meaned, rescaled,
and orthogonalized over the training window so that training-window
sample moments hit their targets exactly:

  * each asset's training mean daily return equals its configured mean;
  * each asset's training sample vol equals its configured vol;
  * the training tangency Sharpe ratio (max attainable by any long-only
    or short portfolio) equals the sector's target, which bounds the
    Monte-Carlo max-Sharpe portfolio's Sharpe from above.

Everything is seeded; re-running the script reproduces the tree byte for
byte. BANDHANBNK starts trading 2018-03-27 (insufficient training
coverage, so ingestion must exclude it), and two tickers per sector have
a few interior missing dates to exercise forward-filling.
"""

from __future__ import annotations

import datetime as dt
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
DATA_DIR = ROOT / "fixtures" / "data"
CONFIG_DIR = ROOT / "fixtures" / "configs"

GLOBAL_SEED = 20160104
RF_ANNUAL = 0.01
TRADING_DAYS = 250.0

CAL_START = dt.date(2016, 1, 1)
CAL_END = dt.date(2021, 8, 26)
TRAIN_END = dt.date(2020, 12, 31)
TEST_START = dt.date(2021, 1, 1)
LATE_LISTING = {"BANDHANBNK": dt.date(2018, 3, 27)}

# sector -> (tickers, mean pairwise correlation, tangency Sharpe target)
# Leader (index 0) carries a mean premium so the max-Sharpe portfolio
# concentrates and the HRP/CLA Herfindahl comparison has a clear signal.
SECTORS = {
    "auto": (
        ["MARUTI", "MM", "TATAMOTORS", "BAJAJAUTO", "HEROMOTOCO",
         "EICHERMOT", "BHARATFORG", "BALKRISIND", "ASHOKLEY", "MRF"],
        0.45, 0.95,
    ),
    "banking": (
        ["HDFCBANK", "ICICIBANK", "SBIN", "KOTAKBANK", "AXISBANK",
         "INDUSINDBK", "AUBANK", "BANDHANBNK", "FEDERALBNK", "IDFCFIRSTB"],
        0.55, 0.85,
    ),
    "fmcg": (
        ["HINDUNILVR", "ITC", "NESTLEIND", "TATACONSUM", "BRITANNIA",
         "GODREJCP", "DABUR", "JUBLFOOD", "MARICO", "COLPAL"],
        0.40, 1.05,
    ),
    "it": (
        ["INFY", "TCS", "TECHM", "WIPRO", "HCLTECH",
         "MPHASIS", "LTI", "MINDTREE", "COFORGE", "OFSS"],
        0.50, 1.15,
    ),
    "metal": (
        ["TATASTEEL", "JSWSTEEL", "HINDALCO", "ADANIENT", "VEDL",
         "COALINDIA", "NMDC", "SAIL", "JINDALSTEL", "APLAPOLLO"],
        0.55, 0.75,
    ),
    "pharma": (
        ["SUNPHARMA", "DIVISLAB", "DRREDDY", "CIPLA", "LUPIN",
         "AUROPHARMA", "BIOCON", "ALKEM", "TORNTPHARM", "CADILAHC"],
        0.35, 0.90,
    ),
    "realty": (
        ["DLF", "GODREJPROP", "OBEROIRLTY", "PHOENIXLTD", "IBREALEST",
         "PRESTIGE", "BRIGADE", "SOBHA", "SUNTECK", "HEMIPROP"],
        0.60, 0.65,
    ),
    "nifty": (
        ["RELIANCE", "HDFCBANK", "INFY", "ICICIBANK", "TCS", "KOTAKBANK",
         "HINDUNILVR", "ITC", "LT", "AXISBANK", "BHARTIARTL", "ASIANPAINT"],
        0.35, 1.00,
    ),
}

CONFIG_TEMPLATE = """\
sector = "{sector}"
data_dir = "../data/{sector}"
tickers = [{tickers}]
coverage_threshold = 0.95

[window]
train_start = 2016-01-01
train_end = 2020-12-31
test_start = 2021-01-01
test_end = 2021-08-26
"""


def weekday_calendar() -> list[dt.date]:
    days = []
    day = CAL_START
    while day <= CAL_END:
        if day.weekday() < 5:
            days.append(day)
        day += dt.timedelta(days=1)
    return days


def demean_unit_std(x: np.ndarray, train: slice) -> np.ndarray:
    """Exact zero mean and unit sample std (ddof=1) over the train slice."""
    x = x - x[train].mean()
    return x / x[train].std(ddof=1)


def sector_returns(
    rng: np.random.Generator, n: int, t_total: int, t_train: int,
    rho: float, sharpe_target: float,
) -> np.ndarray:
    train = slice(0, t_train)
    beta = rng.uniform(0.6, 1.1, size=n)
    vol_annual = rng.uniform(0.20, 0.34, size=n)
    sigma = vol_annual / np.sqrt(TRADING_DAYS)

    # Factor scale chosen so mean pairwise correlation ~= rho, capped so
    # every asset keeps strictly positive idiosyncratic variance.
    sigma_f = np.sqrt(rho) * sigma.mean() / beta.mean()
    sigma_f = min(sigma_f, 0.9 * float(np.min(sigma / beta)))
    sigma_e = np.sqrt(sigma**2 - (beta * sigma_f) ** 2)

    f = demean_unit_std(rng.standard_normal(t_total), train)
    eps = rng.standard_normal((t_total, n))
    for i in range(n):
        e = eps[:, i]
        coef = e[train] @ f[train] / (f[train] @ f[train])
        eps[:, i] = demean_unit_std(e - coef * f, train)

    shocks = beta * sigma_f * f[:, None] + sigma_e * eps

    # Scale excess means so the training tangency Sharpe hits the target.
    excess = rng.uniform(0.07, 0.16, size=n)
    excess[0] += 0.07
    cov_annual = np.cov(shocks[train].T, ddof=1) * TRADING_DAYS
    tangency = float(np.sqrt(excess @ np.linalg.solve(cov_annual, excess)))
    excess *= sharpe_target / tangency
    mu_daily = (excess + RF_ANNUAL) / TRADING_DAYS

    # Anchor the test-window mean as well: over ~160 days the sample mean
    # drifts enough to push annualized Sharpe ratios toward their sanity
    # bounds, so pin it, then rotate some of the leader's premium into the
    # rest of the sector — winners mean-revert out of sample, which is what
    # separates a concentrated allocation from a diversified one.
    test = slice(t_train + 1, None)
    shocks[test] -= shocks[test].mean(axis=0)
    tilt = np.full(n, 0.8 * excess[0] / (n - 1))
    tilt[0] = -0.8 * excess[0]
    shocks[test] += tilt / TRADING_DAYS

    return mu_daily + shocks


def main() -> None:
    calendar = weekday_calendar()
    n_dates = len(calendar)
    t_train_dates = sum(1 for d in calendar if d <= TRAIN_END)
    t_returns = n_dates - 1
    t_train_returns = t_train_dates - 1

    for sector_index, (sector, (tickers, rho, sharpe_target)) in enumerate(
        sorted(SECTORS.items())
    ):
        rng = np.random.default_rng(GLOBAL_SEED + sector_index)
        n = len(tickers)
        returns = sector_returns(
            rng, n, t_returns, t_train_returns, rho, sharpe_target
        )

        base_prices = rng.uniform(150.0, 2500.0, size=n)
        prices = np.empty((n_dates, n))
        prices[0] = base_prices
        prices[1:] = base_prices * np.cumprod(1.0 + returns, axis=0)

        # Interior gaps: two tickers lose three 2019 dates each (ffill
        # territory, far from window boundaries and first observations).
        gap_tickers = rng.choice(n, size=2, replace=False)
        gap_dates: dict[int, set[int]] = {}
        idx_2019 = [i for i, d in enumerate(calendar) if d.year == 2019]
        for tk in gap_tickers:
            drop = rng.choice(idx_2019, size=3, replace=False)
            gap_dates[int(tk)] = {int(i) for i in drop}

        out_dir = DATA_DIR / sector
        out_dir.mkdir(parents=True, exist_ok=True)
        for j, ticker in enumerate(tickers):
            first = LATE_LISTING.get(ticker, CAL_START)
            skip = gap_dates.get(j, set())
            lines = ["date,close"]
            for i, day in enumerate(calendar):
                if day < first or i in skip:
                    continue
                lines.append(f"{day.isoformat()},{prices[i, j]:.4f}")
            (out_dir / f"{ticker}.csv").write_text("\n".join(lines) + "\n")

        CONFIG_DIR.mkdir(parents=True, exist_ok=True)
        ticker_list = ", ".join(f'"{t}"' for t in tickers)
        (CONFIG_DIR / f"{sector}.toml").write_text(
            CONFIG_TEMPLATE.format(sector=sector, tickers=ticker_list)
        )

        active = [j for j, t in enumerate(tickers) if t not in LATE_LISTING]
        tr = returns[:t_train_returns, active]
        cov_a = np.cov(tr.T, ddof=1) * TRADING_DAYS
        exc = tr.mean(axis=0) * TRADING_DAYS - RF_ANNUAL
        tan = float(np.sqrt(exc @ np.linalg.solve(cov_a, exc)))
        corr = np.corrcoef(tr.T)
        mean_rho = float(corr[np.triu_indices_from(corr, 1)].mean())
        print(
            f"{sector:8s} n={n:2d} dates={n_dates} "
            f"vol=[{np.sqrt(np.diag(cov_a)).min():.3f},"
            f"{np.sqrt(np.diag(cov_a)).max():.3f}] "
            f"rho={mean_rho:.2f} tangencySR={tan:.3f}"
        )


if __name__ == "__main__":
    main()
