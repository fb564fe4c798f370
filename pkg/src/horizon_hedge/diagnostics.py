"""Descriptive statistics and specification tests for return series.

Sample variances use the T-1 (Bessel) divisor; skewness and kurtosis are the
usual standardized central moments computed with 1/T moments, as in the
Jarque-Bera statistic.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .data import AlignedPair, ReturnSeries
from .errors import DegenerateVariance, SingularRegression, TooShort

# Standard KPSS asymptotic critical values (upper tail), keyed by test size.
KPSS_CRITICAL_VALUES = {
    "constant": {"10%": 0.347, "5%": 0.463, "2.5%": 0.574, "1%": 0.739},
    "trend": {"10%": 0.119, "5%": 0.146, "2.5%": 0.176, "1%": 0.216},
}


class Verdict(str, enum.Enum):
    REJECT = "reject"
    FAIL_TO_REJECT = "fail-to-reject"
    NOT_APPLICABLE = "not-applicable"


def _verdict(p_value: float | None, level: float) -> Verdict:
    if p_value is None or not np.isfinite(p_value):
        return Verdict.NOT_APPLICABLE
    return Verdict.REJECT if p_value < level else Verdict.FAIL_TO_REJECT


@dataclass(frozen=True)
class MomentReport:
    mean_pct: float
    sd_pct: float
    excess_skewness: float
    excess_kurtosis: float
    p_skew: float | None
    p_kurt: float | None
    skew_verdict: Verdict = Verdict.NOT_APPLICABLE
    kurt_verdict: Verdict = Verdict.NOT_APPLICABLE
    n: int = 0

    @property
    def kurtosis(self) -> float:
        """Raw (non-excess) kurtosis."""
        return self.excess_kurtosis + 3.0


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float | None
    verdict: Verdict
    critical_values: dict[str, float] = field(default_factory=dict)
    name: str = ""

    __test__ = False  # keep pytest from collecting this class


def _values(r) -> np.ndarray:
    if isinstance(r, ReturnSeries):
        return r.returns
    return np.asarray(r, dtype=float)


def _standardized_moments(x: np.ndarray) -> tuple[float, float]:
    d = x - x.mean()
    m2 = np.mean(d * d)
    if m2 <= 0 or not np.isfinite(m2):
        return math.nan, math.nan
    skew = np.mean(d ** 3) / m2 ** 1.5
    kurt = np.mean(d ** 4) / m2 ** 2 - 3.0
    return float(skew), float(kurt)


def raw_kurtosis(r) -> float:
    """Sample kurtosis (excess + 3); the quantity fed to temporal aggregation."""
    x = _values(r)
    if len(x) < 4:
        raise TooShort("kurtosis needs at least 4 observations")
    return _standardized_moments(x)[1] + 3.0


def moments(r, level: float = 0.05) -> MomentReport:
    x = _values(r)
    n = len(x)
    if n < 4:
        raise TooShort("moments need at least 4 observations")
    sd = float(np.std(x, ddof=1))
    skew, kurt = _standardized_moments(x)
    if not np.isfinite(skew):
        return MomentReport(100 * float(x.mean()), 100 * sd, math.nan, math.nan,
                            None, None, n=n)
    p_skew = float(2 * stats.norm.sf(abs(skew) / math.sqrt(6.0 / n)))
    p_kurt = float(2 * stats.norm.sf(abs(kurt) / math.sqrt(24.0 / n)))
    return MomentReport(
        mean_pct=100 * float(x.mean()),
        sd_pct=100 * sd,
        excess_skewness=skew,
        excess_kurtosis=kurt,
        p_skew=p_skew,
        p_kurt=p_kurt,
        skew_verdict=_verdict(p_skew, level),
        kurt_verdict=_verdict(p_kurt, level),
        n=n,
    )


def jarque_bera_from_moments(n: int, skewness: float, excess_kurtosis: float,
                             level: float = 0.05) -> TestResult:
    jb = n / 6.0 * (skewness ** 2 + excess_kurtosis ** 2 / 4.0)
    p = float(stats.chi2.sf(jb, 2))
    return TestResult(float(jb), p, _verdict(p, level), name="jarque-bera")


def jarque_bera(r, level: float = 0.05) -> TestResult:
    x = _values(r)
    if len(x) < 8:
        raise TooShort("Jarque-Bera needs at least 8 observations")
    skew, kurt = _standardized_moments(x)
    if not np.isfinite(skew):
        return TestResult(math.nan, None, Verdict.NOT_APPLICABLE, name="jarque-bera")
    return jarque_bera_from_moments(len(x), skew, kurt, level)


def engle_lm(r, lags: int = 4, level: float = 0.05) -> TestResult:
    """Engle's ARCH-LM test: (T - lags) * R^2 of e_t^2 on its own lags."""
    x = _values(r)
    lags = int(lags)
    if lags < 1:
        raise ValueError("lags must be positive")
    if len(x) <= lags + 1:
        raise TooShort(f"ARCH-LM with {lags} lags needs more than {lags + 1} observations")
    e2 = (x - x.mean()) ** 2
    y = e2[lags:]
    n = len(y)
    X = np.column_stack([np.ones(n)] + [e2[lags - j:len(e2) - j] for j in range(1, lags + 1)])
    tss = float(np.sum((y - y.mean()) ** 2))
    if n <= lags + 1 or tss <= 0 or np.linalg.matrix_rank(X) < X.shape[1]:
        raise SingularRegression("ARCH-LM auxiliary regression is singular")
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    r2 = 1.0 - float(resid @ resid) / tss
    stat = n * r2
    p = float(stats.chi2.sf(stat, lags))
    return TestResult(stat, p, _verdict(p, level), name=f"arch-lm({lags})")


def newey_west_bandwidth(n: int) -> int:
    return int(math.floor(4.0 * (n / 100.0) ** 0.25))


def long_run_variance(e: np.ndarray, lags: int) -> float:
    """Bartlett-kernel long-run variance of a zero-mean residual series."""
    n = len(e)
    s2 = float(e @ e) / n
    for j in range(1, lags + 1):
        w = 1.0 - j / (lags + 1.0)
        s2 += 2.0 * w * float(e[j:] @ e[:-j]) / n
    return s2


def kpss(r, variant: str = "constant", lags: int | None = None,
         level: str = "1%") -> TestResult:
    """KPSS stationarity test; the null hypothesis is (level or trend) stationarity.

    ``lags`` defaults to floor(4 (T/100)^(1/4)). The verdict compares the
    statistic to the critical value at ``level`` (one of 10%, 5%, 2.5%, 1%).
    """
    x = _values(r)
    n = len(x)
    if n < 20:
        raise TooShort("KPSS needs at least 20 observations")
    if variant not in KPSS_CRITICAL_VALUES:
        raise ValueError(f"variant must be 'constant' or 'trend', got {variant!r}")
    if variant == "constant":
        e = x - x.mean()
    else:
        t = np.arange(1, n + 1, dtype=float)
        X = np.column_stack([np.ones(n), t])
        coef, *_ = np.linalg.lstsq(X, x, rcond=None)
        e = x - X @ coef
    l = newey_west_bandwidth(n) if lags is None else int(lags)
    cvs = dict(KPSS_CRITICAL_VALUES[variant])
    s2 = long_run_variance(e, l)
    if s2 <= 0:
        return TestResult(math.nan, None, Verdict.NOT_APPLICABLE, cvs, f"kpss-{variant}")
    S = np.cumsum(e)
    stat = float(S @ S) / (n * n * s2)
    verdict = Verdict.REJECT if stat > cvs[level] else Verdict.FAIL_TO_REJECT
    return TestResult(stat, None, verdict, cvs, f"kpss-{variant}")


def correlation(pair: AlignedPair) -> float:
    x, y = pair.cash.returns, pair.futures.returns
    if len(x) < 2:
        raise TooShort("correlation needs at least 2 observations")
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx <= 0 or syy <= 0:
        raise DegenerateVariance("a leg has zero variance")
    rho = float(dx @ dy) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, rho))
