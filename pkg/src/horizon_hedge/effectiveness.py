"""Risk measures of hedged positions and hedging effectiveness.

Losses are negated returns. VaR at tail probability ``alpha`` is the
empirical order statistic of the sorted losses at (0-based) index
``ceil((1 - alpha) * n)``, capped at the largest loss; CVaR is the mean of
every loss at or beyond that VaR. No interpolation, so values are exactly
reproducible.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import TooFewBlocks, TooShortForTail, ZeroBaselineRisk

MEASURES = ("variance", "var", "cvar")
Z_5PCT = float(stats.norm.ppf(0.975))


@dataclass(frozen=True)
class RiskMeasures:
    variance: float
    var_q: float
    cvar: float
    alpha_level: float = 0.01
    n: int = 0

    def get(self, measure: str) -> float:
        return {"variance": self.variance, "var": self.var_q, "cvar": self.cvar}[measure]


@dataclass(frozen=True)
class EffectivenessReport:
    he_variance: float
    he_var: float
    he_cvar: float
    hedged: RiskMeasures | None = None
    unhedged: RiskMeasures | None = None
    horizon_h: int = 1
    kind: str = ""

    def get(self, measure: str) -> float:
        return {"variance": self.he_variance, "var": self.he_var, "cvar": self.he_cvar}[measure]


@dataclass(frozen=True, eq=False)
class BlockEffectiveness:
    """Per-block effectiveness series, one array per measure."""

    variance: np.ndarray
    var: np.ndarray
    cvar: np.ndarray
    block_len: int

    def get(self, measure: str) -> np.ndarray:
        return getattr(self, measure)

    def __len__(self) -> int:
        return len(self.variance)


@dataclass(frozen=True)
class DiffTest:
    t_stat: float
    bootstrap_se: float
    n_resamples: int
    significant_5pct: bool
    mean_diff: float = math.nan
    n_blocks: int = 0


def _values(r) -> np.ndarray:
    if hasattr(r, "returns"):
        return np.asarray(r.returns, dtype=float)
    return np.asarray(r, dtype=float)


def tail_index(n: int, alpha: float) -> int:
    """0-based position of the VaR order statistic among n ascending losses."""
    # round() strips float noise such as (1 - 0.01) * 100 == 99.00000000000001
    return min(math.ceil(round((1.0 - alpha) * n, 9)), n - 1)


def risk_measures(r, alpha: float = 0.01, strict: bool = True) -> RiskMeasures:
    """Sample variance, empirical VaR and CVaR (loss units) at tail probability alpha.

    ``strict`` demands at least ceil(1/alpha) observations so the tail holds a
    full observation; per-block evaluation relaxes it, in which case the VaR
    of a short block is its largest loss.
    """
    x = _values(r)
    n = len(x)
    if not 0 < alpha < 0.5:
        raise ValueError("alpha must lie in (0, 0.5)")
    need = math.ceil(round(1.0 / alpha, 9))
    if n < 2 or (strict and n < need):
        raise TooShortForTail(f"{n} observations; need at least {need if strict else 2}")
    losses = np.sort(-x)
    var_q = float(losses[tail_index(n, alpha)])
    tail = losses[losses >= var_q]
    cvar = math.fsum(tail.tolist()) / len(tail)
    return RiskMeasures(float(np.var(x, ddof=1)), var_q, cvar, alpha, n)


def effectiveness(hedged: RiskMeasures, unhedged: RiskMeasures, horizon_h: int = 1,
                  kind: str = "") -> EffectivenessReport:
    """HE = 1 - hedged / unhedged for variance, VaR and CVaR."""
    for m in MEASURES:
        if not unhedged.get(m) > 0:
            raise ZeroBaselineRisk(f"unhedged {m} is {unhedged.get(m)}; effectiveness undefined")
    he = [1.0 - hedged.get(m) / unhedged.get(m) for m in MEASURES]
    return EffectivenessReport(*he, hedged=hedged, unhedged=unhedged, horizon_h=horizon_h,
                               kind=kind)


def block_starts(n: int, block_len: int) -> np.ndarray:
    """Start offsets of complete blocks, laid out backwards from the last observation."""
    n_blocks = n // block_len
    first = n - n_blocks * block_len
    return first + block_len * np.arange(n_blocks)


def block_effectiveness(hedged, unhedged, block_len: int, alpha: float = 0.01) -> BlockEffectiveness:
    """Effectiveness of each non-overlapping block of ``block_len`` periods.

    Blocks whose unhedged risk is not positive (e.g. a block with no losses
    for the VaR measure) get NaN for that measure.
    """
    xh, xu = _values(hedged), _values(unhedged)
    if len(xh) != len(xu):
        raise ValueError("hedged and unhedged series differ in length")
    block_len = int(block_len)
    if block_len < 2:
        raise ValueError("block_len must be at least 2")
    starts = block_starts(len(xh), block_len)
    if len(starts) < 2:
        raise TooFewBlocks(f"{len(xh)} periods give {len(starts)} block(s) of {block_len}")
    out = {m: np.empty(len(starts)) for m in MEASURES}
    for k, s in enumerate(starts):
        rh = risk_measures(xh[s:s + block_len], alpha, strict=False)
        ru = risk_measures(xu[s:s + block_len], alpha, strict=False)
        for m in MEASURES:
            base = ru.get(m)
            out[m][k] = 1.0 - rh.get(m) / base if base > 0 else np.nan
    return BlockEffectiveness(out["variance"], out["var"], out["cvar"], block_len)


def bootstrap_diff_test(he_a, he_b, n_resamples: int = 2000, seed: int = 0,
                        workers: int = 1) -> DiffTest:
    """Paired bootstrap t-statistic for mean(he_a) - mean(he_b).

    Block indices are resampled with replacement (the same indices for both
    series) and the SE is the standard deviation of the resampled mean
    differences. Pairs with a NaN in either series are dropped first. The
    resample index matrix is drawn up front from ``seed``, so the result does
    not depend on ``workers``.
    """
    a, b = np.asarray(he_a, dtype=float), np.asarray(he_b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("paired series must have equal length")
    keep = np.isfinite(a) & np.isfinite(b)
    d = a[keep] - b[keep]
    n = len(d)
    if n < 5:
        raise TooFewBlocks(f"{n} usable paired blocks; need at least 5")
    n_resamples = int(n_resamples)
    idx = np.random.default_rng(seed).integers(0, n, size=(n_resamples, n))

    def chunk_means(rows):
        return d[idx[rows]].mean(axis=1)

    if workers > 1:
        chunks = np.array_split(np.arange(n_resamples), workers)
        with ThreadPoolExecutor(max_workers=workers) as ex:
            means = np.concatenate(list(ex.map(chunk_means, chunks)))
    else:
        means = chunk_means(np.arange(n_resamples))
    mean_diff = float(d.mean())
    se = float(np.std(means, ddof=1))
    if se > 0:
        t = mean_diff / se
    else:
        t = 0.0 if mean_diff == 0 else math.copysign(math.inf, mean_diff)
    return DiffTest(t, se, n_resamples, bool(abs(t) > Z_5PCT), mean_diff, n)


def parametric_var(r, alpha: float = 0.01) -> tuple[float, float]:
    """Normal-distribution VaR and CVaR, for comparison with the empirical values."""
    x = _values(r)
    mu, sd = float(x.mean()), float(x.std(ddof=1))
    z = float(stats.norm.ppf(1.0 - alpha))
    var_q = -mu + sd * z
    cvar = -mu + sd * float(stats.norm.pdf(z)) / alpha
    return var_q, cvar
