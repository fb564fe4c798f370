"""Synthetic cash/futures price files for tests and demonstrations."""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

import numpy as np

from . import garch
from .data import AlignedPair, PriceSeries, ReturnSeries

# FTSE-like daily parameters; intercepts chosen so the unconditional daily
# volatilities are about 1.1% (cash) and 1.2% (futures) with correlation ~0.97.
FTSE_LIKE = garch.VechGarchParams(
    omega_s=1.68e-6, alpha_s=0.0565, beta_s=0.9299,
    omega_sf=1.89e-6, alpha_sf=0.0561, beta_sf=0.9290,
    omega_f=2.20e-6, alpha_f=0.0570, beta_f=0.9272,
)


def prices_from_returns(r: ReturnSeries, start_price: float = 100.0,
                        first_date=None) -> PriceSeries:
    """Integrate log returns into a price path; one extra leading row at ``start_price``."""
    if first_date is None:
        first_date = np.busday_offset(r.dates[0], -1, roll="backward")
    dates = np.concatenate([[np.datetime64(first_date, "D")], r.dates])
    growth = np.exp(np.concatenate([[0.0], np.cumsum(r.returns)]))
    return PriceSeries(dates, start_price * growth, r.label)


def write_prices_csv(p: PriceSeries, path) -> Path:
    """Write ``date,price`` rows atomically (temp file + rename)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["date,price"] + [f"{d},{float(v)!r}" for d, v in zip(p.dates, p.prices)]
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=".csv")
    with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, path)
    return path


def write_pair(pair: AlignedPair, out_dir, prefix: str = "",
               start_price: float = 100.0) -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    first = np.busday_offset(pair.dates[0], -1, roll="backward")
    cash = prices_from_returns(pair.cash, start_price, first)
    fut = prices_from_returns(pair.futures, start_price, first)
    return (write_prices_csv(cash, out_dir / f"{prefix}cash.csv"),
            write_prices_csv(fut, out_dir / f"{prefix}futures.csv"))


def simulate_fixture(params: garch.VechGarchParams, T: int, seed: int, out_dir,
                     prefix: str = "") -> tuple[Path, Path]:
    """Simulate ``T`` VECH returns and write the two price CSVs (T + 1 rows each)."""
    pair = garch.simulate(params, T, seed)
    return write_pair(pair, out_dir, prefix)


def simulate_cointegrated(T: int, seed: int, sigma_common: float = 0.011,
                          sigma_cash: float = 0.0025, sigma_futures: float = 0.0028,
                          garch_params: garch.UniGarchParams | None = None,
                          start_date: str = "2000-01-03") -> AlignedPair:
    """Cash and futures log prices sharing a random-walk component.

    log S_t = P_t + u_t and log F_t = P_t + v_t, with P_t a random walk
    (GARCH(1,1) increments if ``garch_params`` is given) and u, v independent
    white noise. The transitory noise washes out of long-horizon returns, so
    the cash/futures correlation rises with the horizon.
    """
    rng = np.random.default_rng(seed)
    if garch_params is None:
        common = sigma_common * rng.standard_normal(T + 1)
    else:
        common = garch.simulate_univariate(garch_params, T + 1, seed=int(rng.integers(2**31))).returns
    level = np.cumsum(common)
    u = sigma_cash * rng.standard_normal(T + 1)
    v = sigma_futures * rng.standard_normal(T + 1)
    log_s, log_f = level + u, level + v
    dates = garch.business_dates(T, start_date)
    cash = ReturnSeries(dates, np.diff(log_s), 1, "cash")
    fut = ReturnSeries(dates, np.diff(log_f), 1, "futures")
    return AlignedPair(cash, fut)
