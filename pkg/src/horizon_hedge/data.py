"""Price ingestion, log returns, frequency aggregation, alignment and splitting.

Returns are decimal fractions throughout; percentages only appear in reports.
Dates are ``numpy.datetime64[D]`` arrays.
"""

from __future__ import annotations

import csv
import datetime as dt
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DuplicateDate,
    EmptyIntersection,
    FrequencyMismatch,
    MissingFile,
    NonPositivePrice,
    ParseError,
    SplitOutOfRange,
    TooShort,
)

logger = logging.getLogger(__name__)

ROLES = ("cash", "futures")


def as_dates(values) -> np.ndarray:
    """Coerce dates / ISO strings / datetime64 values to a ``datetime64[D]`` array."""
    return np.asarray(values, dtype="datetime64[D]")


def as_date(value) -> np.datetime64:
    return np.datetime64(value, "D")


@dataclass(frozen=True, eq=False)
class PriceSeries:
    dates: np.ndarray
    prices: np.ndarray
    label: str = ""
    role: str = "cash"

    def __post_init__(self):
        dates = as_dates(self.dates)
        prices = np.asarray(self.prices, dtype=float)
        if dates.shape != prices.shape or dates.ndim != 1:
            raise ValueError("dates and prices must be 1-d arrays of equal length")
        if len(dates) > 1 and not np.all(np.diff(dates) > np.timedelta64(0, "D")):
            raise ValueError("dates must be strictly increasing")
        if np.any(~(prices > 0)):
            bad = int(np.flatnonzero(~(prices > 0))[0])
            raise NonPositivePrice(bad, float(prices[bad]))
        if self.role not in ROLES:
            raise ValueError(f"role must be one of {ROLES}, got {self.role!r}")
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "prices", prices)

    def __len__(self) -> int:
        return len(self.prices)


@dataclass(frozen=True, eq=False)
class ReturnSeries:
    dates: np.ndarray
    returns: np.ndarray
    frequency_h: int = 1
    label: str = ""

    def __post_init__(self):
        dates = as_dates(self.dates)
        returns = np.asarray(self.returns, dtype=float)
        if dates.shape != returns.shape or dates.ndim != 1:
            raise ValueError("dates and returns must be 1-d arrays of equal length")
        if int(self.frequency_h) < 1:
            raise ValueError("frequency_h must be a positive integer")
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "returns", returns)
        object.__setattr__(self, "frequency_h", int(self.frequency_h))

    def __len__(self) -> int:
        return len(self.returns)

    def select(self, mask_or_index) -> "ReturnSeries":
        return ReturnSeries(self.dates[mask_or_index], self.returns[mask_or_index],
                            self.frequency_h, self.label)


@dataclass(frozen=True, eq=False)
class AlignedPair:
    cash: ReturnSeries
    futures: ReturnSeries

    def __post_init__(self):
        if self.cash.frequency_h != self.futures.frequency_h:
            raise FrequencyMismatch("legs have different frequencies")
        if not np.array_equal(self.cash.dates, self.futures.dates):
            raise ValueError("legs must share an identical date vector")

    @property
    def dates(self) -> np.ndarray:
        return self.cash.dates

    @property
    def frequency_h(self) -> int:
        return self.cash.frequency_h

    def __len__(self) -> int:
        return len(self.cash)

    def select(self, mask_or_index) -> "AlignedPair":
        return AlignedPair(self.cash.select(mask_or_index), self.futures.select(mask_or_index))

    def as_matrix(self) -> np.ndarray:
        """(T, 2) array with cash in column 0 and futures in column 1."""
        return np.column_stack([self.cash.returns, self.futures.returns])


@dataclass(frozen=True, eq=False)
class SampleSplit:
    estimation: AlignedPair
    holdout: AlignedPair
    split_date: np.datetime64


def load_prices(path, label: str | None = None, role: str = "cash",
                date_column: str = "date", price_column: str = "price") -> PriceSeries:
    """Read a ``date,price`` CSV (ISO-8601 dates, UTF-8) into a sorted PriceSeries.

    Row numbers in errors are 1-based file lines, so the header is line 1.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"price file not found: {path}")
    dates: list[dt.date] = []
    prices: list[float] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or date_column not in reader.fieldnames \
                or price_column not in reader.fieldnames:
            raise ParseError(1, f"header must contain {date_column!r} and {price_column!r}")
        for line_no, row in enumerate(reader, start=2):
            raw_date = (row.get(date_column) or "").strip()
            raw_price = (row.get(price_column) or "").strip()
            try:
                day = dt.date.fromisoformat(raw_date)
            except ValueError:
                raise ParseError(line_no, f"unparseable date {raw_date!r}") from None
            try:
                price = float(raw_price)
            except ValueError:
                raise ParseError(line_no, f"unparseable price {raw_price!r}") from None
            if not np.isfinite(price):
                raise ParseError(line_no, f"non-finite price {raw_price!r}")
            if price <= 0:
                raise NonPositivePrice(line_no, price)
            dates.append(day)
            prices.append(price)

    order = sorted(range(len(dates)), key=dates.__getitem__)
    sorted_dates = [dates[i] for i in order]
    for prev, cur in zip(sorted_dates, sorted_dates[1:]):
        if prev == cur:
            raise DuplicateDate(cur.isoformat())
    return PriceSeries(
        dates=as_dates(sorted_dates),
        prices=np.array([prices[i] for i in order], dtype=float),
        label=label if label is not None else path.stem,
        role=role,
    )


def log_returns(p: PriceSeries) -> ReturnSeries:
    if len(p) < 2:
        raise TooShort("need at least two prices for a return")
    logp = np.log(p.prices)
    return ReturnSeries(p.dates[1:], logp[1:] - logp[:-1], 1, p.label)


def aggregate(r: ReturnSeries, h: int) -> ReturnSeries:
    """Sum non-overlapping blocks of ``h`` base returns.

    Blocks are anchored at the last observation and laid out backwards, so the
    most recent block is always complete and any partial block is the leading
    one, which is dropped. Each output is dated at its block's final date.
    """
    h = int(h)
    if h < 1:
        raise ValueError("h must be a positive integer")
    if r.frequency_h != 1:
        raise FrequencyMismatch("aggregate expects base-frequency (h=1) returns")
    if h == 1:
        return r
    n_blocks = len(r) // h
    if n_blocks == 0:
        raise TooShort(f"{len(r)} base returns cannot fill one block of {h}")
    start = len(r) - n_blocks * h
    if start:
        logger.debug("aggregate h=%d: dropping %d leading partial-block returns", h, start)
    blocks = r.returns[start:].reshape(n_blocks, h)
    return ReturnSeries(r.dates[start + h - 1::h], blocks.sum(axis=1), h, r.label)


def leading_discard(n: int, h: int) -> int:
    """Number of base returns dropped by :func:`aggregate` for length ``n``."""
    return n - (n // h) * h


def align(cash: ReturnSeries, fut: ReturnSeries) -> AlignedPair:
    if cash.frequency_h != fut.frequency_h:
        raise FrequencyMismatch(
            f"cannot align h={cash.frequency_h} with h={fut.frequency_h}")
    common, ic, jf = np.intersect1d(cash.dates, fut.dates, assume_unique=True,
                                    return_indices=True)
    if len(common) == 0:
        raise EmptyIntersection("cash and futures share no dates")
    return AlignedPair(cash.select(ic), fut.select(jf))


def split(pair: AlignedPair, split_date) -> SampleSplit:
    """Estimation sample = dates <= split_date; holdout = the rest."""
    split_date = as_date(split_date)
    dates = pair.dates
    if split_date < dates[0] or split_date > dates[-1]:
        raise SplitOutOfRange(
            f"split date {split_date} outside [{dates[0]}, {dates[-1]}]")
    cut = int(np.searchsorted(dates, split_date, side="right"))
    if cut == len(dates):
        logger.warning("split at final date %s leaves an empty holdout sample", split_date)
    return SampleSplit(pair.select(slice(0, cut)), pair.select(slice(cut, None)), split_date)


def pair_from_prices(cash: PriceSeries, futures: PriceSeries) -> AlignedPair:
    """Log returns of both legs over their common price dates.

    Prices are intersected before differencing so that a date missing on one
    leg never produces a two-period return paired with a one-period return.
    """
    common, ic, jf = np.intersect1d(cash.dates, futures.dates, assume_unique=True,
                                    return_indices=True)
    if len(common) == 0:
        raise EmptyIntersection("cash and futures share no price dates")
    c = PriceSeries(common, cash.prices[ic], cash.label, cash.role)
    f = PriceSeries(common, futures.prices[jf], futures.label, futures.role)
    return align(log_returns(c), log_returns(f))


def aggregate_pair(pair: AlignedPair, h: int) -> AlignedPair:
    return AlignedPair(aggregate(pair.cash, h), aggregate(pair.futures, h))
