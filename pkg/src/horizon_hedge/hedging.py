"""Hedge-ratio paths and hedged portfolio returns.

A :class:`HedgePath` maps each return date to the ratio applied over the
period ending at that date. GARCH ratios are built from conditional moments
that are known one period ahead, so a GARCH path dated ``t`` only uses data
through ``t - 1``.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass

import numpy as np

from . import garch
from .data import AlignedPair, as_dates
from .errors import DateMismatch, DegenerateVariance, NoPrecedingBaseDate, TooShort

logger = logging.getLogger(__name__)

KINDS = ("ols", "garch", "scaled-from-base", "naive")
CONSTANT_KINDS = ("ols", "naive")
TIMINGS = ("in-sample", "out-of-sample")


@dataclass(frozen=True, eq=False)
class HedgePath:
    dates: np.ndarray
    ratios: np.ndarray
    kind: str
    horizon_h: int = 1
    base_kind: str | None = None

    def __post_init__(self):
        dates = as_dates(self.dates)
        ratios = np.asarray(self.ratios, dtype=float)
        if dates.shape != ratios.shape:
            raise ValueError("dates and ratios must have equal length")
        if not np.all(np.isfinite(ratios)):
            raise ValueError("hedge ratios must be finite")
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "ratios", ratios)

    def __len__(self) -> int:
        return len(self.ratios)

    @property
    def is_constant(self) -> bool:
        if self.kind in CONSTANT_KINDS:
            return True
        return self.kind == "scaled-from-base" and self.base_kind in CONSTANT_KINDS

    @property
    def label(self) -> str:
        if self.kind == "scaled-from-base":
            return f"scaled-{self.base_kind}"
        return self.kind

    def stats(self) -> dict[str, float]:
        r = self.ratios
        return {"mean": float(r.mean()), "sd": float(r.std(ddof=1)) if len(r) > 1 else 0.0,
                "min": float(r.min()), "max": float(r.max()), "n": len(r)}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["date", "ratio", "kind", "horizon"])
        for d, r in zip(self.dates, self.ratios):
            w.writerow([str(d), repr(float(r)), self.label, self.horizon_h])
        return buf.getvalue()


@dataclass(frozen=True, eq=False)
class HedgedReturns:
    dates: np.ndarray
    returns: np.ndarray
    source: str

    def __len__(self) -> int:
        return len(self.returns)


def ols_hedge(pair: AlignedPair) -> HedgePath:
    """Minimum-variance ratio cov(r_s, r_f) / var(r_f), constant over the sample."""
    if len(pair) < 3:
        raise TooShort("OLS hedge needs at least 3 observations")
    rs, rf = pair.cash.returns, pair.futures.returns
    df = rf - rf.mean()
    var_f = float(df @ df)
    if var_f <= 0:
        raise DegenerateVariance("futures returns have zero variance")
    beta = float(df @ (rs - rs.mean())) / var_f
    return HedgePath(pair.dates, np.full(len(pair), beta), "ols", pair.frequency_h)


def naive_hedge(dates, horizon_h: int = 1) -> HedgePath:
    dates = as_dates(dates)
    return HedgePath(dates, np.ones(len(dates)), "naive", horizon_h)


def constant_hedge(value: float, dates, kind: str = "ols", horizon_h: int = 1) -> HedgePath:
    dates = as_dates(dates)
    return HedgePath(dates, np.full(len(dates), float(value)), kind, horizon_h)


def garch_hedge(path: garch.CovariancePath) -> HedgePath:
    return HedgePath(path.dates, path.H_sf / path.H_f, "garch", path.frequency_h)


def scaled_hedge(base: HedgePath, target_dates, h: int) -> HedgePath:
    """Apply base-frequency ratios to h-period hedges.

    Square-root-of-time scaling multiplies the covariance and the futures
    variance by the same factor, so the ratio itself is unchanged; what
    scaling decides is which base ratio each h-period uses. The period ending
    at a target date covers the ``h`` base periods up to it, and its ratio is
    the base ratio of the first of them: for GARCH that is the one-step
    forecast formed at the close of the previous h-period.
    """
    if base.kind not in ("ols", "garch"):
        raise ValueError("scaled hedges derive from an ols or garch base path")
    if base.horizon_h != 1:
        raise ValueError("base path must be at the base frequency")
    target_dates = as_dates(target_dates)
    h = int(h)
    end = np.searchsorted(base.dates, target_dates, side="right") - 1
    first = end - (h - 1)
    if len(target_dates) and (end[0] < 0 or first.min() < 0):
        raise NoPrecedingBaseDate("a target period starts before the first base date")
    return HedgePath(target_dates, base.ratios[first], "scaled-from-base", h, base.kind)


def hedged_portfolio(pair: AlignedPair, hp: HedgePath, timing: str = "in-sample") -> HedgedReturns:
    """Hedged returns r_s - beta_t r_f.

    ``in-sample``: ``hp`` must be dated exactly like ``pair``.
    ``out-of-sample``: constant strategies carry their single ratio (fitted on
    the estimation sample) onto every holdout date; time-varying paths must
    cover the holdout dates and are read at each date. Ex-ante validity of a
    time-varying path is the caller's job; :func:`garch_forecast_hedge` builds
    one.
    """
    if timing not in TIMINGS:
        raise ValueError(f"timing must be one of {TIMINGS}")
    rs, rf = pair.cash.returns, pair.futures.returns
    if timing == "out-of-sample" and hp.is_constant:
        if len(hp) == 0:
            raise DateMismatch("empty constant hedge path")
        beta = np.full(len(pair), hp.ratios[-1])
    elif timing == "in-sample":
        if not np.array_equal(hp.dates, pair.dates):
            raise DateMismatch("in-sample hedge path must share the pair's dates")
        beta = hp.ratios
    else:
        idx = np.searchsorted(hp.dates, pair.dates)
        ok = (idx < len(hp)) & (hp.dates[np.minimum(idx, len(hp) - 1)] == pair.dates)
        if not np.all(ok):
            raise DateMismatch("hedge path does not cover every holdout date")
        beta = hp.ratios[idx]
    return HedgedReturns(pair.dates, rs - beta * rf, f"{hp.label}/h={hp.horizon_h}/{timing}")


def garch_forecast_hedge(estimation: AlignedPair, holdout: AlignedPair,
                         params: garch.VechGarchParams, refit_every: int | None = None,
                         min_obs: int = garch.MIN_OBS) -> HedgePath:
    """Out-of-sample GARCH ratios from one-step-ahead covariance forecasts.

    By default parameters stay at ``params`` (fitted on ``estimation``) and the
    recursion simply continues through the holdout. With ``refit_every=k``
    the model is re-estimated on the expanding window every k holdout
    periods.
    """
    est_path = garch.filter_vech(estimation, params)
    if not refit_every:
        return garch_hedge(garch.forecast_path(est_path, holdout, params))

    k = int(refit_every)
    ratios = []
    current, window = params, estimation
    path = est_path
    for start in range(0, len(holdout), k):
        chunk = holdout.select(slice(start, start + k))
        ratios.append(garch_hedge(garch.forecast_path(path, chunk, current)).ratios)
        window = _concat(window, chunk)
        if start + k < len(holdout):
            current = garch.estimate(window, init=current, min_obs=min_obs).params
            path = garch.filter_vech(window, current)
    return HedgePath(holdout.dates, np.concatenate(ratios), "garch", holdout.frequency_h)


def _concat(a: AlignedPair, b: AlignedPair) -> AlignedPair:
    from .data import ReturnSeries
    cash = ReturnSeries(np.concatenate([a.dates, b.dates]),
                        np.concatenate([a.cash.returns, b.cash.returns]), a.frequency_h)
    fut = ReturnSeries(np.concatenate([a.dates, b.dates]),
                       np.concatenate([a.futures.returns, b.futures.returns]), a.frequency_h)
    return AlignedPair(cash, fut)
